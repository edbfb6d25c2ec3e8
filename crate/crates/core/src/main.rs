fn main() -> std::process::ExitCode {
    indefinite_bvp::cli::main()
}
