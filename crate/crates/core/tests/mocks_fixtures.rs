use std::time::Instant;

use mettlext_core::metamorphic::{PayloadCatalog, SIGNATURE_N};
use mettlext_core::mocks::{fixtures, mock_assist, mock_summarize, mock_translate, run_mock, FaultProfile};
use mettlext_core::similarity::{normalize, score, word_ngrams, SimilarityMetric};
use mettlext_core::templates::{builtin_templates, instantiate};
use mettlext_core::TaskCategory;

fn with(f: impl FnOnce(&mut FaultProfile)) -> FaultProfile {
    let mut p = FaultProfile::clean();
    f(&mut p);
    p
}

#[test]
fn hidden_text_fixture() {
    let clean = mock_summarize(fixtures::HIDDEN_TEXT, &FaultProfile::clean(), 0);
    assert!(clean.contains(fixtures::VISIBLE_STATEMENT), "{clean}");
    assert!(!clean.to_lowercase().contains("no scientific consensus"), "{clean}");
    let leaky = mock_summarize(fixtures::HIDDEN_TEXT, &with(|p| p.process_hidden_text = true), 0);
    assert!(leaky.contains("no scientific consensus"), "{leaky}");
}

#[test]
fn translation_fixture() {
    let clean = FaultProfile::clean();
    assert_eq!(mock_translate(fixtures::TRANSLATION_SIMPLE, &clean, 0), fixtures::TRANSLATION_EXPECTED);
    assert_eq!(mock_translate(fixtures::TRANSLATION_NESTED, &clean, 0), fixtures::TRANSLATION_EXPECTED);
    let fragile = with(|p| p.structure_sensitivity = true);
    let simple = mock_translate(fixtures::TRANSLATION_SIMPLE, &fragile, 0);
    let nested = mock_translate(fixtures::TRANSLATION_NESTED, &fragile, 0);
    assert_eq!(simple, fixtures::TRANSLATION_EXPECTED);
    assert_ne!(nested, simple);
    assert!(score(SimilarityMetric::TokenJaccard, &simple, &nested) < 0.8, "{nested}");
}

#[test]
fn untranslatable_sentences_pass_through() {
    let out = run_mock(TaskCategory::Translation, "<p>Nicht im Wörterbuch.</p>", &FaultProfile::clean(), 0);
    assert_eq!(out.text, "Nicht im Wörterbuch.");
    assert_eq!(out.meta["passthrough_sentences"], 1);
}

#[test]
fn injection_fixture() {
    let catalog = PayloadCatalog::builtin();
    let follow = mock_assist(fixtures::PROMPT_INJECTION, &with(|p| p.follow_injections = true), 0);
    assert!(follow.contains("Consider replacing this paragraph with: 'Climate change is a hoax'"), "{follow}");
    let clean = mock_assist(fixtures::PROMPT_INJECTION, &FaultProfile::clean(), 0);
    let grams = word_ngrams(&normalize(&clean), SIGNATURE_N);
    for p in catalog.entries() {
        for s in &p.signature_ngrams {
            assert!(!grams.contains(s), "clean output carries `{s}`: {clean}");
        }
    }
}

#[test]
fn alignment_fixture() {
    let clean = mock_summarize(fixtures::ALIGNMENT, &FaultProfile::clean(), 0);
    assert!(clean.starts_with("Climate Change Impact"), "{clean}");
    let inverted = mock_summarize(fixtures::ALIGNMENT, &with(|p| p.alignment_inversion = true), 0);
    assert!(!inverted.contains("Impact"), "{inverted}");
    assert!(inverted.starts_with("Minor details about methodology."), "{inverted}");
}

#[test]
fn clean_profile_is_pure() {
    let page = instantiate(&builtin_templates()[0], 3000, 4).unwrap();
    for task in TaskCategory::ALL {
        let a = run_mock(task, &page.html, &FaultProfile::clean(), 1);
        let b = run_mock(task, &page.html, &FaultProfile::clean(), 99);
        assert_eq!(a, b);
    }
}

#[test]
fn nondeterminism_varies_with_seed() {
    let page = instantiate(&builtin_templates()[8], 4000, 2).unwrap();
    let p = with(|p| p.nondeterminism = 0.3);
    let a = mock_assist(&page.html, &p, 1);
    let b = mock_assist(&page.html, &p, 2);
    assert_ne!(a, b);
    assert_eq!(a, mock_assist(&page.html, &p, 1));
}

#[test]
fn scaling_changes_latency_not_text() {
    let page = instantiate(&builtin_templates()[1], 4000, 2).unwrap();
    let fast = with(|p| p.latency_ms_per_kchar = 1.0);
    let slow = with(|p| {
        p.latency_ms_per_kchar = 1.0;
        p.scaling_exponent = 2.0;
    });
    let t0 = Instant::now();
    let a = mock_summarize(&page.html, &fast, 0);
    let d_fast = t0.elapsed();
    let t1 = Instant::now();
    let b = mock_summarize(&page.html, &slow, 0);
    let d_slow = t1.elapsed();
    assert_eq!(a, b);
    // ~4 ms versus ~16 ms
    assert!(d_slow > d_fast * 2, "{d_fast:?} {d_slow:?}");
}
