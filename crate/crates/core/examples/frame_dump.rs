//! Simulate a frame, write its slot observations as a frame dump and read it back.
//!
//! cargo run --release --example frame_dump [path]

use std::fs::File;
use std::io::{BufReader, BufWriter};

use comma::ortho_mod::{modulate, read_frame_dump, simulate_slots, write_frame_dump, Codebook, SystemParams};

fn main() -> comma::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "frame.coma".into());
    let params = SystemParams { k_a: 4, q: 16, n: 6, m: 4, p: 2.0, b: 10, eps: 0.05 };
    let codebook = Codebook::generate(params.b, params.n, params.q, 11)?;
    let words = (0..params.k_a as u64).map(|m| codebook.codeword(m * 37)).collect::<comma::Result<Vec<_>>>()?;
    println!("user 0 sends {:?}, first pulse {:?}", words[0], &modulate(&words[0], params.q)?[..params.q]);

    let frame = simulate_slots(&params, &words, None, 5, false)?;
    let ys: Vec<_> = frame.slots.iter().map(|s| s.y.clone()).collect();
    write_frame_dump(BufWriter::new(File::create(&path)?), &ys)?;
    let back = read_frame_dump(BufReader::new(File::open(&path)?))?;
    let worst = ys
        .iter()
        .zip(&back)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x.re - y.re as f64).abs().max((x.im - y.im as f64).abs())))
        .fold(0.0, f64::max);
    println!("wrote {} slots of {}x{} to {path}; max f32 rounding {worst:.2e}", back.len(), params.m, params.q);
    Ok(())
}
