fn main() {
    std::process::exit(perfhom::harness::cli_main(std::env::args_os()));
}
