fn main() {
    std::process::exit(transgress::cli_main());
}
