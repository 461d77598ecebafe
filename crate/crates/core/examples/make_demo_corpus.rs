//! Generate a synthetic demo corpus in the directory layout the `synth`
//! subcommand expects.
//!
//! Usage: cargo run -p cardiofilt --example make_demo_corpus -- <dir> [clean_per_class] [noise_count]

use cardiofilt::corpus::write_demo_corpus;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| {
        eprintln!("usage: make_demo_corpus <dir> [clean_per_class] [noise_count]");
        std::process::exit(2);
    }));
    let clean_per_class: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(4);
    let noise_count: usize = args.next().map(|v| v.parse().unwrap()).unwrap_or(30);

    let (clean_root, noise_dir) =
        write_demo_corpus(&dir, clean_per_class, noise_count, 12.0, 13.0, 2000.0, 1).unwrap();
    println!("clean recordings: {}", clean_root.display());
    println!("noise recordings: {}", noise_dir.display());
}
