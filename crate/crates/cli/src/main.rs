use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use webbed::completion::{completion_step, transport_check, validate_stage, CompletionConfig, CompletionState};
use webbed::corpus::{corpus, equal_pairs};
use webbed::dsl::{self, stage_tables, Definition, OmegaDef};
use webbed::fo_axioms::{check_horn_axioms, encode, DEFAULT_ARITY_CAP};
use webbed::interp::{interpret, separate, token_in_interp, Fuel};
use webbed::kernel::{check_is_axioms, Budget};
use webbed::lambda::{self, Term};
use webbed::ultra::{collapse_check, los_equation_check, principal_ultrafilter, ultraproduct_web, UltraWeb};
use webbed::webs::validate_phi;
use webbed::Token;

#[derive(Parser)]
#[command(name = "webbed", version, about = "Information systems, i-webs and their lambda-models")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct FuelArgs {
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    width: usize,
}

impl FuelArgs {
    fn fuel(self) -> Fuel {
        Fuel::new(self.depth, self.width)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the information-system axioms of a definition.
    CheckIs {
        #[arg(long)]
        web: PathBuf,
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Also validate φ as a b-morphism.
        #[arg(long)]
        phi: bool,
    },
    /// Interpret a closed term, or query one token.
    Interp {
        #[arg(long)]
        web: PathBuf,
        #[arg(short = 'M', long = "term")]
        term: String,
        #[arg(long)]
        token: Option<String>,
        #[command(flatten)]
        fuel: FuelArgs,
    },
    /// Look for a token separating two closed terms.
    Separate {
        #[arg(long)]
        web: PathBuf,
        #[arg(short = 'M')]
        m: String,
        #[arg(short = 'N')]
        n: String,
        #[command(flatten)]
        fuel: FuelArgs,
    },
    /// Build and validate completion stages; `--out` saves the completion.
    Complete {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, default_value_t = 1)]
        stages: usize,
        /// Overrides WEBBED_LAMBDA_STAGE_CAP.
        #[arg(long)]
        stage_cap: Option<usize>,
    },
    /// Transport tokens of a term's denotation along ψ¹ and ψ².
    Transport {
        /// A completion definition.
        #[arg(long)]
        web: PathBuf,
        #[arg(short = 'M', long = "term")]
        term: String,
        #[command(flatten)]
        fuel: FuelArgs,
    },
    /// Check the principal collapse of an ultraproduct.
    Ultra {
        #[command(flatten)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Compare the separator on a factor and on the ultraproduct.
    Los {
        #[command(flatten)]
        family: Family,
        #[arg(short = 'M')]
        m: String,
        #[arg(short = 'N')]
        n: String,
        #[command(flatten)]
        fuel: FuelArgs,
    },
    /// Check Horn axioms (1)-(7); `--out` saves the encoded structure.
    Horn {
        #[arg(long)]
        web: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ARITY_CAP)]
        cap: usize,
    },
    /// Generate a labelled corpus of closed term pairs.
    Corpus {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        size: usize,
        /// Only pairs labelled EQUAL.
        #[arg(long)]
        equal: bool,
    },
}

/// An ultraproduct given either as one definition file or as factor files
/// plus a 1-based principal index.
#[derive(Args)]
struct Family {
    #[arg(long, conflicts_with_all = ["factor", "principal"])]
    web: Option<PathBuf>,
    #[arg(long)]
    factor: Vec<PathBuf>,
    #[arg(long)]
    principal: Option<usize>,
}

/// The report and whether every check passed.
struct Report {
    text: String,
    ok: bool,
}

impl Report {
    fn ok(text: String) -> Report {
        Report { text, ok: true }
    }
}

fn load(path: &Path) -> Result<Definition> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    dsl::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn term(text: &str) -> Result<Term> {
    lambda::parse(text).with_context(|| format!("parsing term `{text}`"))
}

fn family(f: &Family) -> Result<(UltraWeb, Definition)> {
    let (principal, factors) = match &f.web {
        Some(p) => match load(p)? {
            Definition::Ultra { principal, factors } => (principal, factors),
            other => bail!("{} holds a {} definition, not an ultraproduct", p.display(), other.kind()),
        },
        None => {
            if f.factor.is_empty() {
                bail!("give --web or at least one --factor");
            }
            let j = f.principal.unwrap_or(1);
            if j == 0 {
                bail!("--principal is 1-based");
            }
            (j - 1, f.factor.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?)
        }
    };
    let webs = factors.iter().map(Definition::web).collect::<webbed::Result<Vec<_>>>()?;
    let u = principal_ultrafilter(webs.len(), principal)?;
    Ok((ultraproduct_web(webs, &u)?, Definition::Ultra { principal, factors }))
}

fn run(command: &Command, out: Option<&Path>) -> Result<Report> {
    match command {
        Command::CheckIs { web, level, phi } => {
            let def = load(web)?;
            let budget = Budget::at_level(*level);
            let r = check_is_axioms(def.sys()?.as_ref(), &budget)?;
            let mut ok = r.all_pass();
            let mut text = r.to_string();
            if *phi {
                let p = validate_phi(&def.web()?, &budget)?;
                ok &= p.all_pass();
                text.push_str(&p.to_string());
            }
            Ok(Report { text, ok })
        }
        Command::Interp { web, term: t, token, fuel } => {
            let w = load(web)?.web()?;
            let t = term(t)?;
            let text = match token {
                Some(g) => {
                    let g = Token::parse(g)?;
                    format!("{}\n", if token_in_interp(&g, &t, &w, fuel.fuel())?.is_yes() { "YES" } else { "UNKNOWN" })
                }
                None => interpret(&t, &w, fuel.fuel())?.iter().map(|g| format!("{g}\n")).collect(),
            };
            Ok(Report::ok(text))
        }
        Command::Separate { web, m, n, fuel } => {
            let w = load(web)?.web()?;
            let v = separate(&term(m)?, &term(n)?, &w, fuel.fuel())?;
            Ok(Report::ok(format!("{v}\n")))
        }
        Command::Complete { left, right, stages, stage_cap } => {
            let (l, r) = (load(left)?, load(right)?);
            let mut cfg = CompletionConfig::default();
            if let Some(cap) = stage_cap {
                cfg.stage_cap = *cap;
            }
            if *stages == 0 {
                bail!("--stages must be at least 1");
            }
            let mut st = CompletionState::new(&l.web()?, &r.web()?, cfg.clone())?;
            let mut text = String::new();
            let mut ok = true;
            let first = validate_stage(&st)?;
            writeln!(text, "STAGE 0 TOKENS {}", st.universe().len())?;
            text.push_str(&first.to_string());
            ok &= first.all_pass();
            while st.stage() < *stages {
                st = completion_step(&st)?;
                let trunc = if st.truncated() { " TRUNCATED" } else { "" };
                writeln!(text, "STAGE {} TOKENS {}{trunc}", st.stage(), st.universe().len())?;
                text.push_str(&st.report().to_string());
                ok &= st.report().all_pass();
            }
            if let Some(path) = out {
                let omega = st.into_omega();
                let tables = stage_tables(&omega, *stages)?;
                let def = OmegaDef { left: Box::new(l), right: Box::new(r), stages: *stages, config: cfg, tables };
                std::fs::write(path, Definition::Omega(def).to_string()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Report { text, ok })
        }
        Command::Transport { web, term: t, fuel } => {
            let Definition::Omega(def) = load(web)? else { bail!("{} is not a completion definition", web.display()) };
            let omega = def.build()?;
            let t = term(t)?;
            let mut text = String::new();
            let mut ok = true;
            for g in interpret(&t, &omega.as_iweb(), fuel.fuel())? {
                for which in [1, 2] {
                    match transport_check(&t, &g, which, &omega, fuel.fuel()) {
                        Ok(f) => writeln!(text, "TRANSPORT {g} psi{which} OK depth {}", f.depth)?,
                        Err(webbed::Error::TransportViolation(why)) => {
                            ok = false;
                            writeln!(text, "TRANSPORT {g} psi{which} VIOLATION {why}")?;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Ok(Report { text, ok })
        }
        Command::Ultra { family: f, level } => {
            let (uw, def) = family(f)?;
            let r = collapse_check(&uw, &Budget::at_level(*level))?;
            if let Some(path) = out {
                std::fs::write(path, def.to_string()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Report { text: r.to_string(), ok: r.all_pass() })
        }
        Command::Los { family: f, m, n, fuel } => {
            let (uw, _) = family(f)?;
            let v = los_equation_check(&term(m)?, &term(n)?, &uw, fuel.fuel())?;
            let agree = v.agrees(&uw);
            let text = format!("FACTOR {}\nULTRA {}\n{}\n", v.factor, v.ultra, if agree { "AGREE" } else { "DISAGREE" });
            Ok(Report { text, ok: agree })
        }
        Command::Horn { web, cap } => {
            let st = match load(web)? {
                Definition::Structure(s) => s,
                def => encode(def.sys()?.as_ref(), *cap)?,
            };
            let r = check_horn_axioms(&st);
            if let Some(path) = out {
                std::fs::write(path, Definition::Structure(st).to_string()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Report { text: r.to_string(), ok: r.all_pass() })
        }
        Command::Corpus { seed, size, equal } => {
            let pairs = if *equal { equal_pairs(*seed, *size)? } else { corpus(*seed, *size)? };
            Ok(Report::ok(pairs.iter().map(|p| format!("{p}\n")).collect()))
        }
    }
}

/// Subcommands whose `--out` is a definition file rather than the report.
fn writes_definition(c: &Command) -> bool {
    matches!(c, Command::Complete { .. } | Command::Ultra { .. } | Command::Horn { .. })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command, cli.out.as_deref()) {
        Ok(report) => {
            let written = match (&cli.out, writes_definition(&cli.command)) {
                (Some(path), false) => std::fs::write(path, &report.text).with_context(|| format!("writing {}", path.display())),
                _ => {
                    print!("{}", report.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
