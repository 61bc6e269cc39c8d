//! Build a tensor manifest the way a framework dump would, then quantize it
//! through the CLI entry point and read the codes back.

use std::fs;

use sparq::tensorio::{read_npy, write_npy, NpyArray, NpyData, TensorManifest};

fn main() -> sparq::Result<()> {
    let dir = tempfile::tempdir()?;
    let act: Vec<f32> = (0..2 * 4 * 4).map(|i| (i % 5) as f32 * 0.3).collect();
    let wgt: Vec<f32> = (0..3 * 2 * 3 * 3).map(|i| ((i % 7) as f32 - 3.0) * 0.05).collect();
    write_npy(dir.path().join("act.npy"), &NpyArray::new(vec![1, 2, 4, 4], NpyData::F32(act))?)?;
    write_npy(dir.path().join("w.npy"), &NpyArray::new(vec![3, 2, 3, 3], NpyData::F32(wgt))?)?;
    let manifest = r#"{
  "model": "toy",
  "entries": [
    {"name": "conv1.act", "path": "act.npy", "role": "activation", "layer": 0,
     "shape": [1, 2, 4, 4], "max_abs": 1.2},
    {"name": "conv1.weight", "path": "w.npy", "role": "weight", "layer": 0,
     "shape": [3, 2, 3, 3], "padding": 1}
  ]
}"#;
    fs::write(dir.path().join("manifest.json"), manifest)?;

    let out = dir.path().join("q");
    let src = dir.path().join("manifest.json");
    let args: [&std::ffi::OsStr; 6] = ["sparq".as_ref(), "quantize".as_ref(), "--manifest".as_ref(), src.as_os_str(), "--out".as_ref(), out.as_os_str()];
    assert_eq!(sparq::cli::run(args), 0);

    let quantized = TensorManifest::load(out.join("manifest.json"))?;
    for e in &quantized.entries {
        let arr = read_npy(&e.path)?;
        println!("{} {:?} {:?} scale {:?}", e.name, e.dtype, arr.shape, e.scale);
    }

    let y = out.join("y.npy");
    let quantized_path = out.join("manifest.json");
    let args: [&std::ffi::OsStr; 10] = [
        "sparq".as_ref(),
        "matmul".as_ref(),
        "--manifest".as_ref(),
        quantized_path.as_os_str(),
        "--layer".as_ref(),
        "0".as_ref(),
        "--engine".as_ref(),
        "tc".as_ref(),
        "--out".as_ref(),
        y.as_os_str(),
    ];
    assert_eq!(sparq::cli::run(args), 0);
    println!("layer 0 output {:?}", read_npy(&y)?.shape);
    Ok(())
}
