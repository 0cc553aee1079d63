//! Stems checked against a frozen reference vocabulary (word, stem) produced
//! by an independent implementation of the original rule set.

use outline_core::textproc::porter::stem;

#[test]
fn matches_reference_vocabulary() {
    let data = include_str!("data/porter_vocab.tsv");
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in data.lines() {
        let (word, expected) = line.split_once('\t').expect("word<TAB>stem");
        n += 1;
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: got {got}, want {expected}"));
        }
    }
    assert!(n > 5000, "vocabulary has {n} words");
    assert!(mismatches.is_empty(), "{} of {n} differ:\n{}", mismatches.len(), mismatches.join("\n"));
}
