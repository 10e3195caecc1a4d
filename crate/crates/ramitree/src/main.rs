fn main() {
    std::process::exit(ramitree::cli::run() as i32);
}
