//! Renders a layered scene and writes it as an HCI-style directory.
//!
//! Usage: `cargo run --example synthesize_scene [out_dir] [size]`

use std::path::PathBuf;

use lf_entropy::synth::{render, write_scene, Layer, SceneSpec, Support, Texture};

fn main() -> lf_entropy::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_scene".into()));
    let size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);
    let s = size as f64;

    let spec = SceneSpec {
        name: "boxes".into(),
        width: size,
        height: size,
        layers: vec![
            Layer {
                texture: Texture::Noise { seed: 11, sigma: 0.2, scale: 2.0 },
                disparity: -0.5,
                support: None,
            },
            Layer {
                texture: Texture::Constant { value: 0.3 },
                disparity: 0.5,
                support: Some(Support { x0: 0.1 * s, y0: 0.55 * s, x1: 0.5 * s, y1: 0.9 * s }),
            },
            Layer {
                texture: Texture::Checkerboard { period: 6.0 },
                disparity: 1.5,
                support: Some(Support { x0: 0.45 * s, y0: 0.15 * s, x1: 0.8 * s, y1: 0.5 * s }),
            },
        ],
        noise_sigma: 0.0,
        ..SceneSpec::two_layer()
    };
    let scene = render(&spec)?;
    write_scene(&scene, &spec, &out)?;
    let counts = scene.regions.counts();
    println!(
        "wrote {}: {} views of {size}x{size}, ground-truth regions (occluding, occluded, texture, smooth) = {counts:?}",
        out.display(),
        scene.lightfield.views().len()
    );
    Ok(())
}
