use mettlext_core::dom::{compute_visibility, extract_partition, normalize_whitespace, parse_html, HidingTechnique, VisibilityStatus};
use proptest::prelude::*;

fn styled_soup() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("<div>"),
        Just("</div>"),
        Just("<p>"),
        Just("</p>"),
        Just("<span>"),
        Just("</span>"),
        Just("<div style=\"display:none\">"),
        Just("<span style=\"opacity:0\">"),
        Just("<p style=\"visibility:hidden\">"),
        Just("<em style=\"visibility:visible\">"),
        Just("</em>"),
        Just("<div style=\"position:absolute;left:-9999px\">"),
        Just("<p class=\"gone\">"),
        Just("<style>.gone{display:none}</style>"),
        Just("<script>var t = 'not text';</script>"),
        Just("<ul><li>"),
        Just("<table><tr><td>"),
        Just("one"),
        Just("two words"),
        Just(" three &amp; "),
        Just(" a < b "),
    ];
    prop::collection::vec(piece, 0..60).prop_map(|v| v.concat())
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

proptest! {
    #[test]
    fn parsing_is_deterministic(html in styled_soup()) {
        let a = parse_html(&html);
        let b = parse_html(&html);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(compute_visibility(&a), compute_visibility(&b));
    }

    #[test]
    fn reparse_preserves_partition(html in styled_soup()) {
        let doc = parse_html(&html);
        let p1 = extract_partition(&doc, &compute_visibility(&doc));
        let again = parse_html(&doc.to_html());
        let p2 = extract_partition(&again, &compute_visibility(&again));
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn partition_is_complete_and_spans_concatenate(html in styled_soup()) {
        let doc = parse_html(&html);
        let vis = compute_visibility(&doc);
        let part = extract_partition(&doc, &vis);
        let all = doc.text_content(doc.root());
        prop_assert_eq!(word_count(&part.visible_text) + word_count(&part.hidden_text), word_count(&all));
        prop_assert!(!part.visible_text.contains("not text"));
        let spans: Vec<&str> = part.hidden_spans.iter().map(|s| s.text.as_str()).collect();
        prop_assert_eq!(normalize_whitespace(&spans.join(" ")), part.hidden_text);
    }

    #[test]
    fn subtree_hiding_covers_descendants(html in styled_soup()) {
        let doc = parse_html(&html);
        let vis = compute_visibility(&doc);
        for (id, status) in vis.iter() {
            if matches!(status, VisibilityStatus::Hidden(HidingTechnique::DisplayNone | HidingTechnique::ZeroOpacity)) {
                for d in doc.descendants(id) {
                    prop_assert!(vis.get(d).is_hidden());
                }
            }
        }
    }

    #[test]
    fn ids_preorder_and_tree_acyclic(html in styled_soup()) {
        let doc = parse_html(&html);
        prop_assert_eq!(doc.descendants(doc.root()), (0..doc.len()).collect::<Vec<_>>());
        for n in doc.nodes().skip(1) {
            let p = n.parent.expect("non-root has a parent");
            prop_assert!(p < n.id);
            prop_assert_eq!(doc.node(p).children.iter().filter(|&&c| c == n.id).count(), 1);
        }
    }
}
