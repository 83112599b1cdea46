use std::io::{self, Write};

fn main() {
    let mut stdout = io::stdout().lock();
    let code = qsr::cli::run(std::env::args_os(), &mut io::stdin().lock(), &mut stdout, &mut io::stderr().lock());
    let _ = stdout.flush();
    std::process::exit(code);
}
