fn main() -> std::process::ExitCode {
    glmos::cli::main()
}
