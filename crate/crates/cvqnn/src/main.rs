use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            let ts = buf.timestamp_millis();
            writeln!(buf, "{ts} {} {}", record.level(), record.args())
        })
        .target(env_logger::Target::Stderr)
        .init();
    std::process::exit(cvqnn::cli::run(std::env::args().collect()));
}
