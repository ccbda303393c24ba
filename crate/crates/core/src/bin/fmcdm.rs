fn main() -> std::process::ExitCode {
    fuzzy_mcdm::cli::main()
}
