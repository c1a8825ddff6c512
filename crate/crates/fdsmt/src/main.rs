//! Reads SMT-LIB2 commands on standard input and answers on standard
//! output, one response per output-producing command.

use std::io::{BufRead, Write};

use fdsmt::engine::Engine;
use fdsmt::sexpr;

fn main() {
    let mut max_nodes = None;
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--max-nodes" => {
                max_nodes = args
                    .next()
                    .and_then(|v| v.parse::<u64>().ok())
                    .or_else(|| {
                        eprintln!("fdsmt: --max-nodes expects a number");
                        std::process::exit(2);
                    });
            }
            "--help" | "-h" => {
                println!("usage: fdsmt [--max-nodes N]   (reads SMT-LIB2 on stdin)");
                return;
            }
            other => {
                eprintln!("fdsmt: unknown argument {other:?}");
                std::process::exit(2);
            }
        }
    }

    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let mut engine = Engine::new();
    engine.max_nodes = max_nodes;

    let mut buffer = String::new();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        buffer.push_str(&line);
        buffer.push('\n');
        if !sexpr::balanced(&buffer) {
            continue;
        }
        let commands = match sexpr::parse_all(&buffer) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(stdout, "(error \"{e}\")");
                let _ = stdout.flush();
                buffer.clear();
                continue;
            }
        };
        buffer.clear();
        for cmd in &commands {
            if cmd.list().and_then(|l| l.first()).and_then(|h| h.atom()) == Some("exit") {
                return;
            }
            match engine.run_command(cmd) {
                Ok(Some(out)) => {
                    let _ = writeln!(stdout, "{out}");
                }
                Ok(None) => {}
                Err(e) => {
                    let _ = writeln!(stdout, "(error \"{e}\")");
                }
            }
            let _ = stdout.flush();
        }
    }
}
