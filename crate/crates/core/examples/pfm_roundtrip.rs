//! Writes a disparity map with invalid pixels to PFM and reads it back.

use lf_entropy::pfm::{read_pfm, write_pfm};
use lf_entropy::DisparityMap;

fn main() -> lf_entropy::Result<()> {
    let mut map = DisparityMap::from_values(4, 3, (0..12).map(|i| i as f32 * 0.25 - 1.42).collect())?;
    map.set(2, 1, None);
    let path = std::env::temp_dir().join("lf_entropy_example.pfm");
    write_pfm(&map, &path)?;
    let back = read_pfm(&path)?;
    println!("{}: {}x{}, identical after reading: {}", path.display(), back.width(), back.height(), back == map);
    for y in 0..back.height() {
        let row: Vec<String> = (0..back.width())
            .map(|x| back.get(x, y).map_or("  --  ".into(), |v| format!("{v:+.3}")))
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
