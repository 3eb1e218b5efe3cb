fn main() -> std::process::ExitCode {
    uwot::cli::main()
}
