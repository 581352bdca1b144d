fn main() {
    std::process::exit(neurodarwin::harness::run_cli(std::env::args_os()));
}
