fn main() -> std::process::ExitCode {
    nash_stream_cli::app::main()
}
