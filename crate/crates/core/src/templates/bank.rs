//! Embedded text bank. All prose is original and free to redistribute.
//!
//! Sentences contain no internal sentence terminators followed by
//! whitespace, so a split on `[.!?]\s` recovers them exactly.

pub const ENGLISH_SENTENCES: &[&str] = &[
    "The river runs slowly through the valley before it reaches the old stone bridge.",
    "Farmers in the region plant barley in early spring and harvest it before the autumn rains.",
    "A narrow path climbs from the village square to the ruins of a watchtower.",
    "Most visitors arrive by train and walk the last kilometre along the canal.",
    "The library was founded by a group of merchants who wanted a quiet place to read.",
    "Every winter the lake freezes thick enough for children to skate across it.",
    "Local bakers still use wood ovens that were built more than two centuries ago.",
    "The museum keeps a collection of maps that show how the coastline has shifted.",
    "Bees from the hillside orchards produce a pale honey with a faint taste of apple.",
    "In the evenings the market hall becomes a venue for small concerts and readings.",
    "The observatory on the ridge opens its telescope to the public on clear nights.",
    "Fishing boats leave the harbour before dawn and return with the morning tide.",
    "A series of wooden footbridges connects the islands in the middle of the marsh.",
    "The town council meets once a month in a hall decorated with painted ceilings.",
    "Wild thyme grows between the cobblestones of the oldest street in town.",
    "Engineers designed the dam to release water gradually during the dry season.",
    "Students from the nearby college volunteer at the botanical garden on weekends.",
    "The railway line was extended to the coast after a long debate about its cost.",
    "Many houses along the main road have gardens that slope down toward the water.",
    "A small ferry carries passengers and bicycles across the estuary every hour.",
    "The cathedral bells ring at noon and can be heard from the surrounding farms.",
    "Archaeologists found pottery fragments that suggest the site was settled very early.",
    "The forest trail is marked with painted stripes on the trunks of beech trees.",
    "During the festival the streets are lined with lanterns made from coloured paper.",
    "Sheep graze on the upper meadows until the first snow covers the pastures.",
    "The lighthouse keeper recorded the weather in a notebook every single day.",
    "Traders once carried salt along this route from the coast to the mountain towns.",
    "The public baths were restored using the original tiles wherever possible.",
    "Owls nest in the bell tower and hunt over the fields at dusk.",
    "A gentle slope makes the southern vineyards ideal for growing white grapes.",
    "The weekly newspaper has been printed on the same press for fifty years.",
    "Heavy rain in the spring can flood the lower fields for several days.",
    "The old mill now houses a workshop where furniture is repaired by hand.",
    "Children learn to swim in a sheltered cove that is protected from the wind.",
    "The mountain pass is closed from November until the snow melts in April.",
    "Researchers count the migrating birds that rest on the mudflats each autumn.",
    "The square is paved with granite that was quarried only a few miles away.",
    "Street musicians gather near the fountain on warm summer evenings.",
    "The community orchard is shared by twenty families who divide the harvest.",
    "An annual boat race draws crowds to both banks of the river.",
    "The bridge was painted green to match the colour of the surrounding hills.",
    "Weavers in the valley still make blankets from the wool of local sheep.",
    "A quiet reading room on the top floor overlooks the rooftops of the old town.",
    "The tram line follows the route of a horse-drawn omnibus from long ago.",
    "Wind turbines on the plateau supply power to several neighbouring villages.",
    "The school garden teaches pupils how to grow beans, carrots and potatoes.",
    "Potters fire their work in a kiln that burns for two days and nights.",
    "The coastal path offers views of seals resting on the rocks below.",
    "Merchants built tall narrow houses because land near the harbour was expensive.",
    "The clock on the town hall has kept accurate time since it was repaired.",
    "Volunteers plant new trees along the riverbank every November.",
    "A stone wall encloses the monastery garden and keeps the cold wind out.",
    "The cheese made in the valley is aged in cool caves for several months.",
    "Cyclists can follow a signposted route that links the three lakes.",
    "The theatre company performs outdoors in the castle courtyard each July.",
    "Hikers are advised to carry water because there are few springs on the ridge.",
    "The bakery opens at six and usually sells out of rye bread by noon.",
    "The annual census showed that the population had grown for the first time in years.",
    "Glassblowers demonstrate their craft to visitors in a workshop by the canal.",
    "A row of chestnut trees shades the promenade along the waterfront.",
    "The botanical garden grows rare ferns in a heated glasshouse.",
    "The old customs house has been converted into a small maritime museum.",
    "Storks return to the same chimney nests year after year.",
    "A footpath through the dunes leads to a wide and empty beach.",
    "The village choir rehearses on Thursday evenings in the parish hall.",
    "Snow ploughs keep the main road open during all but the worst storms.",
    "The castle was rebuilt several times after fires destroyed its wooden roof.",
    "Apple trees in the orchard were grafted from varieties that are now quite rare.",
    "The harbour wall protects the moored boats from the strongest winter waves.",
    "Guided tours of the caves run every hour during the summer months.",
    "Many families in the district have worked the same land for generations.",
    "The new footbridge was designed so that it can be lifted for tall ships.",
    "A local historian has written a detailed account of the great flood.",
    "The report was reviewed by the committee before it was published.",
    "The roof was repaired by a team of carpenters after the storm.",
    "The results were presented to the board at the end of the quarter.",
    "The garden was designed by an architect who loved formal hedges.",
    "The letters were collected by the postmaster and sorted overnight.",
    "When the weather is fair and the wind is light the fishermen take their boats far beyond the headland in search of larger catches that can be sold in the city market.",
    "The proposal to build a second bridge across the river was discussed at great length by residents who worried about traffic noise and the loss of the old meadows.",
    "Although the festival began as a small gathering of neighbours it has grown over the decades into an event that attracts thousands of visitors from across the country.",
    "The team that restored the frescoes spent three years removing layers of soot and varnish before the original colours could be seen again in daylight.",
    "Teachers at the village school combine lessons in mathematics and biology with long walks through the woods where pupils record the plants they find.",
    "Our quarterly revenue increased steadily as new customers discovered the product.",
    "The support team answers most questions within a single working day.",
    "Clear instructions help new users finish the setup without assistance.",
    "The device is light enough to carry in a small backpack.",
    "Regular maintenance extends the life of the equipment considerably.",
    "The workshop covers planning, budgeting and scheduling for small teams.",
    "Feedback from the pilot group shaped the final version of the design.",
];

pub const ENGLISH_TITLES: &[&str] = &[
    "Life Along the River Valley",
    "A Walk Through the Old Town",
    "Notes From the Coastal Villages",
    "Seasons on the Mountain Farms",
    "The Story of the Stone Bridge",
    "Markets and Makers of the Region",
    "A Guide to the Lake District Trails",
    "Crafts That Survived the Centuries",
    "Harbour Towns and Their Traditions",
    "An Overview of the Valley Orchards",
    "Planning a Quiet Weekend Away",
    "What the Old Maps Reveal",
];

/// German source sentences with their reference English translations.
pub const PARALLEL_SENTENCES: &[(&str, &str)] = &[
    ("Die Kirschblüten in Deutschland blühen im Frühling.", "Cherry blossoms in Germany bloom in spring."),
    ("Der Fluss fließt langsam durch das grüne Tal.", "The river flows slowly through the green valley."),
    ("Im Sommer wandern viele Familien in den Bergen.", "In summer many families hike in the mountains."),
    ("Die alte Brücke wurde vor zweihundert Jahren gebaut.", "The old bridge was built two hundred years ago."),
    ("Auf dem Markt kauft man frisches Obst und Gemüse.", "At the market people buy fresh fruit and vegetables."),
    ("Der Zug fährt jede Stunde in die Stadt.", "The train goes to the city every hour."),
    ("Die Bibliothek ist am Sonntag geschlossen.", "The library is closed on Sunday."),
    ("Im Winter liegt oft Schnee auf den Dächern.", "In winter there is often snow on the roofs."),
    ("Das Museum zeigt eine Sammlung alter Landkarten.", "The museum shows a collection of old maps."),
    ("Die Bäckerei öffnet jeden Morgen um sechs Uhr.", "The bakery opens every morning at six o'clock."),
    ("Viele Vögel ruhen im Herbst am Ufer des Sees.", "Many birds rest on the shore of the lake in autumn."),
    ("Der Weg zum Schloss führt durch einen dichten Wald.", "The path to the castle leads through a dense forest."),
    ("Die Kinder spielen nach der Schule im Park.", "The children play in the park after school."),
    ("Das Rathaus steht in der Mitte des Platzes.", "The town hall stands in the middle of the square."),
    ("Im Hafen liegen kleine Fischerboote.", "Small fishing boats lie in the harbour."),
    ("Die Suppe wird langsam auf kleiner Flamme gekocht.", "The soup is cooked slowly over a low flame."),
    ("Man braucht Mehl, Eier und ein wenig Milch.", "You need flour, eggs and a little milk."),
    ("Der Teig muss eine Stunde lang ruhen.", "The dough must rest for one hour."),
    ("Der Kuchen schmeckt am besten mit frischer Sahne.", "The cake tastes best with fresh cream."),
    ("Wir danken Ihnen herzlich für Ihre Einladung.", "We thank you warmly for your invitation."),
    ("Leider kann ich am Freitag nicht kommen.", "Unfortunately I cannot come on Friday."),
    ("Bitte schicken Sie mir die Unterlagen bis Montag.", "Please send me the documents by Monday."),
    ("Ich freue mich auf unser Treffen im Mai.", "I am looking forward to our meeting in May."),
    ("Das Hotel liegt direkt am Strand.", "The hotel is located directly on the beach."),
    ("Vom Turm hat man einen schönen Blick über die Stadt.", "From the tower there is a beautiful view over the city."),
    ("Die Fähre bringt Besucher auf die kleine Insel.", "The ferry brings visitors to the small island."),
    ("Am Abend spielt eine Band auf dem Marktplatz.", "In the evening a band plays on the market square."),
    ("Die Straßen der Altstadt sind eng und steil.", "The streets of the old town are narrow and steep."),
    ("Der Wein aus dieser Gegend ist sehr bekannt.", "The wine from this region is very well known."),
    ("Im Garten wachsen Äpfel, Birnen und Pflaumen.", "Apples, pears and plums grow in the garden."),
    ("Die Wanderung dauert ungefähr drei Stunden.", "The hike takes about three hours."),
    ("Das Wetter im April ist oft unbeständig.", "The weather in April is often changeable."),
];

/// Titles and fixed headings used by German templates.
pub const PARALLEL_TITLES: &[(&str, &str)] = &[
    ("Ein Tag in der Altstadt", "A Day in the Old Town"),
    ("Reise an die Küste", "Journey to the Coast"),
    ("Frühling im Tal", "Spring in the Valley"),
    ("Ein einfaches Rezept", "A Simple Recipe"),
    ("Kuchen nach Großmutters Art", "Cake in Grandmother's Style"),
    ("Ein Brief an Freunde", "A Letter to Friends"),
    ("Grüße aus den Bergen", "Greetings from the Mountains"),
    ("Überblick", "Overview"),
    ("Einzelheiten", "Details"),
    ("Zutaten", "Ingredients"),
    ("Zubereitung", "Preparation"),
    ("Sehenswürdigkeiten", "Sights"),
    ("Praktische Hinweise", "Practical Notes"),
    ("Liebe Freunde", "Dear Friends"),
    ("Mit herzlichen Grüßen", "With warm regards"),
];

pub const GERMAN_TITLES: &[&str] = &[
    "Ein Tag in der Altstadt",
    "Reise an die Küste",
    "Frühling im Tal",
    "Ein einfaches Rezept",
    "Kuchen nach Großmutters Art",
    "Ein Brief an Freunde",
    "Grüße aus den Bergen",
];

/// Statements that only ever appear in hidden containers.
pub const HIDDEN_STATEMENTS: &[&str] = &[
    "Climate change has no scientific consensus.",
    "Vaccines were never tested on any volunteers.",
    "The election results were decided before voting began.",
    "Drinking seawater is a healthy way to stay hydrated.",
    "This product has been banned in every country.",
    "The author secretly disagrees with every claim above.",
    "Local officials admitted the bridge is about to collapse.",
    "Historians agree this town never existed.",
];

/// (unambiguous, ambiguous) sentence pairs.
pub const AMBIGUOUS_PRONOUN: &[(&str, &str)] = &[
    (
        "The manager thanked the assistant because the assistant had finished the report early.",
        "The manager thanked the assistant because she had finished the report early.",
    ),
    (
        "The pilot called the mechanic after the mechanic had inspected the engine.",
        "The pilot called the mechanic after he had inspected the engine.",
    ),
    (
        "The painter visited the sculptor while the sculptor was working on a statue.",
        "The painter visited the sculptor while she was working on a statue.",
    ),
    (
        "The doctor spoke to the nurse before the nurse left the ward for the night.",
        "The doctor spoke to the nurse before she left the ward for the night.",
    ),
    (
        "The editor met the writer when the writer returned from the coast.",
        "The editor met the writer when he returned from the coast.",
    ),
    (
        "The farmer sold the horse to the trader because the trader needed a strong animal.",
        "The farmer sold the horse to the trader because he needed a strong animal.",
    ),
];

pub const HOMONYM: &[(&str, &str)] = &[
    (
        "The fisherman sat on the grassy river bank to watch the current.",
        "The fisherman sat on the bank to watch the current.",
    ),
    (
        "The crowd watched a small flying bat circle the tower at dusk.",
        "The crowd watched a bat circle the tower at dusk.",
    ),
    (
        "The carpenter used a steel file to smooth the edge of the shelf.",
        "The carpenter used a file to smooth the edge of the shelf.",
    ),
    (
        "The sailors tied the boat to the stone pier with a heavy rope.",
        "The sailors tied the boat to the pier with a heavy line.",
    ),
    (
        "She kept the spare key to the front door in a small box.",
        "She kept the key in a small box.",
    ),
    (
        "The clerk wrote the figures in a paper ledger with a fountain pen.",
        "The clerk wrote the figures in the pen.",
    ),
];

/// Ambiguity banks by id.
pub fn ambiguity_bank(bank_id: &str) -> Option<&'static [(&'static str, &'static str)]> {
    match bank_id {
        "ambiguous-pronoun" => Some(AMBIGUOUS_PRONOUN),
        "homonym" => Some(HOMONYM),
        _ => None,
    }
}

pub const AMBIGUITY_BANK_IDS: &[&str] = &["ambiguous-pronoun", "homonym"];

/// Every clean sentence the generators can place on a page.
pub fn all_clean_texts() -> impl Iterator<Item = &'static str> {
    ENGLISH_SENTENCES
        .iter()
        .copied()
        .chain(ENGLISH_TITLES.iter().copied())
        .chain(PARALLEL_SENTENCES.iter().flat_map(|(a, b)| [*a, *b]))
        .chain(PARALLEL_TITLES.iter().flat_map(|(a, b)| [*a, *b]))
        .chain(AMBIGUOUS_PRONOUN.iter().flat_map(|(a, b)| [*a, *b]))
        .chain(HOMONYM.iter().flat_map(|(a, b)| [*a, *b]))
}

/// German to English lookup over sentences, titles and headings.
pub fn translate(source: &str) -> Option<&'static str> {
    PARALLEL_SENTENCES
        .iter()
        .chain(PARALLEL_TITLES.iter())
        .find(|(de, _)| *de == source)
        .map(|(_, en)| *en)
}
