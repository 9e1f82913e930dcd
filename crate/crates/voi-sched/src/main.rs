use std::process::ExitCode;

fn main() -> ExitCode {
    voi_sched::harness::cli::main()
}
