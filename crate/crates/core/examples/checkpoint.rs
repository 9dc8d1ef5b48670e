//! Write a named-tensor checkpoint, read it back, and watch a flipped byte get caught.
//!
//! `cargo run --example checkpoint`

use seqregen::checkpoint::Checkpoint;
use seqregen::numerics::Tensor;

fn main() {
    let mut ck = Checkpoint::new();
    ck.insert("layer0/w", Tensor::from_fn(&[3, 4], |i| i as f32 * 0.25)).unwrap();
    ck.insert("layer0/b", Tensor::zeros(&[4])).unwrap();
    ck.insert("scale", Tensor::scalar(1.5)).unwrap();
    ck.set_meta("kind", "demo");
    ck.set_meta("steps", 120);

    let dir = std::env::temp_dir().join("seqregen_checkpoint_example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("demo.prgc");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);

    println!("{} ({} bytes)", path.display(), std::fs::metadata(&path).unwrap().len());
    for (name, t) in back.tensors() {
        println!("  {name:<10} {:?}", t.shape());
    }
    println!("  group layer0: {:?}", back.group("layer0").iter().map(|(n, _)| *n).collect::<Vec<_>>());
    let steps: u32 = back.meta_parse("steps").unwrap();
    println!("  meta: {:?}, steps = {steps}", back.metadata());

    let mut bytes = ck.to_bytes().unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 1;
    match Checkpoint::from_bytes(&bytes) {
        Ok(_) => println!("corruption went unnoticed"),
        Err(e) => println!("corrupted copy rejected: {e}"),
    }
}
