//! `strutskit serve|check|routes`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::check::{self, Report};
use crate::config::{ActionTarget, FrameworkConfig};
use crate::http::server::Server;
use crate::portal::{inspect, AssetDirs, PortalOptions};

#[derive(Debug, Parser)]
#[command(
    name = "strutskit",
    version,
    about = "XML-configured MVC dev server and config checker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the development server.
    Serve(CliInvocation),
    /// Load and cross-check every asset without binding a socket.
    Check(CliInvocation),
    /// Print the action-mapping table.
    Routes(CliInvocation),
}

#[derive(Debug, Clone, Args)]
pub struct CliInvocation {
    #[arg(long = "config", default_value = "config")]
    pub config_dir: PathBuf,
    #[arg(long = "data", default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long = "templates", default_value = "templates")]
    pub template_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "STRUTSKIT_PORT", default_value_t = 8080,
          value_parser = clap::value_parser!(u16).range(1..))]
    pub port: u16,
}

impl CliInvocation {
    pub fn dirs(&self) -> AssetDirs {
        AssetDirs::new(&self.config_dir, &self.data_dir, &self.template_dir)
    }
}

/// Parses arguments and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Serve(inv) => cmd_serve(&inv, err),
        Command::Check(inv) => cmd_check(&inv, out, err),
        Command::Routes(inv) => cmd_routes(&inv, out, err),
    }
}

fn missing_dirs(inv: &CliInvocation, err: &mut dyn Write) -> bool {
    let mut missing = false;
    for dir in [&inv.config_dir, &inv.data_dir, &inv.template_dir] {
        if !dir.is_dir() {
            let _ = writeln!(err, "error: directory not found: {}", dir.display());
            missing = true;
        }
    }
    missing
}

pub fn cmd_serve(inv: &CliInvocation, err: &mut dyn Write) -> i32 {
    if missing_dirs(inv, err) {
        return 1;
    }
    let (portal, report) = inspect(&inv.dirs(), PortalOptions::default());
    for f in &report.findings {
        let _ = writeln!(err, "{f}");
    }
    let Some(portal) = portal else {
        let _ = writeln!(
            err,
            "error: startup failed with {} error(s)",
            report.error_count()
        );
        return 1;
    };
    let server = match Server::bind(&inv.host, inv.port, Arc::new(portal.app)) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let handle = match server.shutdown_handle() {
        Ok(h) => h,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    if let Err(e) = ctrlc::set_handler(move || handle.shutdown()) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    if let Ok(addr) = server.local_addr() {
        let _ = writeln!(err, "listening on http://{addr}");
    }
    match server.run() {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

pub fn cmd_check(inv: &CliInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report: Report = if missing_dirs(inv, err) {
        let mut r = Report::default();
        for dir in [&inv.config_dir, &inv.data_dir, &inv.template_dir] {
            if !dir.is_dir() {
                r.error(dir.display(), "0", "directory not found");
            }
        }
        r
    } else {
        inspect(&inv.dirs(), PortalOptions::default()).1
    };
    for f in &report.findings {
        let _ = writeln!(err, "{f}");
    }
    let _ = writeln!(
        out,
        "{} errors, {} warnings",
        report.error_count(),
        report.warning_count()
    );
    if report.error_count() == 0 {
        0
    } else {
        1
    }
}

/// One line per mapping, sorted by path.
pub fn routes_table(config: &FrameworkConfig) -> Vec<String> {
    let mut mappings: Vec<_> = config.action_mappings.iter().collect();
    mappings.sort_by(|a, b| a.path.cmp(&b.path));
    let mut lines = vec!["PATH  FORM_BEAN  SCOPE  INPUT  FORWARDS...".to_string()];
    for m in mappings {
        let mut forwards: Vec<String> = m
            .local_forwards
            .iter()
            .map(|f| format!("{}={}", f.name, f.path))
            .collect();
        if let ActionTarget::Forward(p) = &m.target {
            forwards.insert(0, format!("=>{p}"));
        }
        lines.push(format!(
            "{}  {}  {}  {}  {}",
            m.path,
            m.form_bean.as_deref().unwrap_or("-"),
            m.scope,
            m.input_page.as_deref().unwrap_or("-"),
            forwards.join(" ")
        ));
    }
    lines
}

pub fn cmd_routes(inv: &CliInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut report = Report::default();
    let Some(config) = check::read_config(&inv.config_dir, &mut report) else {
        for f in &report.findings {
            let _ = writeln!(err, "{f}");
        }
        return 1;
    };
    for line in routes_table(&config) {
        let _ = writeln!(out, "{}", line.trim_end());
    }
    0
}
