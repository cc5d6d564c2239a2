//! Writing a model to JSON, reducing it from the file, and checking the
//! reduced file against the original, the same flow as the command line.
//!
//!     cargo run --release --example verify_files

use cereduce::io::{load_model, model_to_json, reduced_to_json, write_atomic};
use cereduce::model::random_ce;
use cereduce::random::seeded_rng;
use cereduce::reduction::{equivalence_check_with_map, reduce_ce};

fn main() -> cereduce::Result<()> {
    let dir = tempfile::tempdir()?;
    let full_path = dir.path().join("random.json");
    let red_path = dir.path().join("random.red.json");

    // two outcomes, one extra observable besides the identity
    let ce = random_ce(3, 2, 1, 1, &mut seeded_rng(2));
    write_atomic(&full_path, model_to_json(&ce)?.as_bytes())?;

    let full = load_model(&full_path)?.model;
    let red = reduce_ce(&full, 1e-9, 0)?;
    write_atomic(&red_path, reduced_to_json(&red)?.as_bytes())?;
    println!("reduced dim {} / original {}", red.reduced_dim(), full.dim() * full.dim());

    let loaded = load_model(&red_path)?;
    let phi = loaded.reduction.expect("reduced files carry the reduction map").map;
    let rep = equivalence_check_with_map(&full, &loaded.model, &phi, 4, 25, 1e-8, 0)?;
    println!("pass {}, max deviation {:.2e} over {}", rep.pass, rep.max_dev, rep.words);
    Ok(())
}
