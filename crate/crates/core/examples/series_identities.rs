//! Reindexing the double sums that arise when an operator acts on
//! `e^{rt} Σ_i G_i t^i`: the original and shifted enumerations visit the
//! same index triples, and the grid shows which `(i, j)` feed derivative `h`.

use pidelay::series_identities::{enumerate_original, enumerate_shifted, multiset, s1_cardinality, terms_grid, SeriesKind};

pub fn run_example() -> bool {
    let mut all_equal = true;
    for kind in [SeriesKind::S1, SeriesKind::S2] {
        for (m, z) in [(2, 3), (3, 5), (4, 8)] {
            let original = enumerate_original(kind, m, z);
            let shifted = enumerate_shifted(kind, m, z);
            let same = multiset(&original) == multiset(&shifted);
            all_equal &= same;
            println!("{kind:?} m={m} z={z}: {} triples, same set: {same}", original.len());
        }
    }
    println!("S1 size for m = 4: {}", s1_cardinality(4));
    let grid = terms_grid(&enumerate_original(SeriesKind::S2, 3, 5), 2);
    println!("terms feeding h = 2 (rows i, columns j):\n{grid}");
    all_equal
}

fn main() {
    assert!(run_example());
}
