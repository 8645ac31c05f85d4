//! Stand-in operator worker used by tests and offline runs.

fn main() {
    std::process::exit(opforge::sandbox::stub::run_from_args(std::env::args().skip(1)));
}
