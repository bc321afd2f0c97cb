fn main() {
    // Placeholder during bring-up; the command surface lands with the rest
    // of the core modules.
    eprintln!("hopfpath: not yet wired");
    std::process::exit(2);
}
