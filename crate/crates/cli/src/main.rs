fn main() {
    std::process::exit(vacpol_cli::main_with(std::env::args_os()));
}
