fn main() -> std::process::ExitCode {
    entity_embeddings::cli::main_with_args(std::env::args_os())
}
