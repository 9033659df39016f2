//! Noisy-linear imputation on an image-like grid: masked pixels are filled
//! with the weighted average of their neighbours, so a smooth picture stays
//! smooth and the shape of the mask does not leak through.
//!
//! cargo run --example grid_imputation

use soco::perturb::{impute_grid, Imputer, ImputerKind, NoiseScale};
use soco::{Mask, Sample, SeedStream, Shape};

const H: usize = 12;
const W: usize = 16;

fn show(title: &str, values: &[f64], mask: Option<&Mask>) {
    println!("{title}");
    for r in 0..H {
        let row: String = (0..W)
            .map(|c| {
                let i = r * W + c;
                if mask.is_some_and(|m| m.is_selected(i)) {
                    return " ##".to_string();
                }
                format!("{:>3}", (values[i] * 9.0).round() as i64)
            })
            .collect();
        println!("  {row}");
    }
}

fn main() -> soco::Result<()> {
    let shape = Shape::Grid { height: H, width: W, channels: 1 };
    // a soft diagonal ramp with a bright blob
    let values: Vec<f64> = (0..H * W)
        .map(|i| {
            let (r, c) = ((i / W) as f64, (i % W) as f64);
            let blob = (-((r - 4.0).powi(2) + (c - 10.0).powi(2)) / 8.0).exp();
            (0.4 * (r + c) / (H + W) as f64 + 0.6 * blob).min(1.0)
        })
        .collect();
    let x = Sample::new(0, shape, values)?;

    // mask a rectangle over the blob and a scattered set of pixels
    let mask = Mask::new((0..H * W).map(|i| ((2..7).contains(&(i / W)) && (8..13).contains(&(i % W))) || i % 7 == 3).collect());

    show("input (x9, masked pixels shown as ##):", x.features(), Some(&mask));
    let filled = impute_grid(&x, &mask, 0.0, SeedStream::new(0))?;
    show("\nnoise-free fill:", filled.features(), None);

    let imputer = Imputer::new(ImputerKind::NoisyLinear, NoiseScale::Std(0.05));
    let noisy = imputer.apply(&x, &mask, &[], 0.05, SeedStream::new(1))?;
    show("\nwith N(0, 0.05^2) noise on imputed pixels:", noisy.features(), None);

    let err = mask.indices().map(|i| (filled.features()[i] - x.features()[i]).abs()).fold(0.0, f64::max);
    println!("\nlargest deviation from the hidden values: {err:.3}");
    Ok(())
}
