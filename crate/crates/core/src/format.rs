//! Plain-text model format.
//!
//! ```text
//! pomdp v1 S A Z T RMAX DISCOUNT
//! prior
//! p_0 ... p_{S-1}
//! T a          # one block per action, S rows of S entries T(x'|x,a)
//! O            # S rows of Z entries O(z|x)
//! R            # S rows of A entries r(x,a)
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment. Reals are
//! written with 17 significant digits so a save/load round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::ModelError;
use crate::model::{ModelTables, TabularPomdp};

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split('#').next().unwrap_or("").split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(1, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> ModelError {
        ModelError::Parse { line: self.line(), msg: msg.into() }
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.items.get(self.pos)?.1;
        self.pos += 1;
        Some(t)
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ModelError> {
        self.next().ok_or_else(|| self.err(format!("unexpected end of input, expected {what}")))
    }

    fn int(&mut self, what: &str) -> Result<usize, ModelError> {
        let t = self.word(what)?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected integer {what}, found '{t}'"))
        })
    }

    fn real(&mut self, what: &str) -> Result<f64, ModelError> {
        let t = self.word(what)?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected real {what}, found '{t}'"))
        })
    }

    fn reals(&mut self, n: usize, what: &str) -> Result<Vec<f64>, ModelError> {
        (0..n).map(|_| self.real(what)).collect()
    }
}

/// Parses a model and validates it.
pub fn parse_model(text: &str) -> Result<TabularPomdp, ModelError> {
    let mut tk = Tokens::new(text);
    if tk.word("header")? != "pomdp" || tk.word("version")? != "v1" {
        tk.pos = tk.pos.saturating_sub(1);
        return Err(tk.err("expected header 'pomdp v1'"));
    }
    let s = tk.int("S")?;
    let a = tk.int("A")?;
    let z = tk.int("Z")?;
    let horizon = tk.int("T")?;
    let r_max = tk.real("RMAX")?;
    let discount = tk.real("DISCOUNT")?;
    let mut prior = None;
    let mut transition: Vec<Option<Vec<f64>>> = vec![None; a];
    let mut observation = None;
    let mut reward = None;
    while let Some(kw) = tk.next() {
        match kw {
            "prior" => prior = Some(tk.reals(s, "prior entry")?),
            "T" => {
                let act = tk.int("action")?;
                if act >= a {
                    tk.pos -= 1;
                    return Err(tk.err(format!("action {act} out of range")));
                }
                transition[act] = Some(tk.reals(s * s, "transition entry")?);
            }
            "O" => observation = Some(tk.reals(s * z, "observation entry")?),
            "R" => reward = Some(tk.reals(s * a, "reward entry")?),
            other => {
                tk.pos -= 1;
                return Err(tk.err(format!("unknown block '{other}'")));
            }
        }
    }
    let missing = |name: &str| ModelError::Parse { line: 0, msg: format!("missing block '{name}'") };
    // file blocks are [a][x][x'], tables are [x][a][x']
    let mut table = vec![0.0; s * a * s];
    for (act, block) in transition.into_iter().enumerate() {
        let block = block.ok_or_else(|| missing(&format!("T {act}")))?;
        for x in 0..s {
            table[(x * a + act) * s..(x * a + act + 1) * s].copy_from_slice(&block[x * s..(x + 1) * s]);
        }
    }
    TabularPomdp::try_new(ModelTables {
        num_states: s,
        num_actions: a,
        num_obs: z,
        horizon,
        transition: table,
        observation: observation.ok_or_else(|| missing("O"))?,
        reward: reward.ok_or_else(|| missing("R"))?,
        prior: prior.ok_or_else(|| missing("prior"))?,
        r_max: Some(r_max),
        discount,
    })
}

fn row(out: &mut String, xs: &[f64]) {
    let line: Vec<String> = xs.iter().map(|x| format!("{x:.16e}")).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

/// Writes `model` in the text format.
pub fn format_model(model: &TabularPomdp) -> String {
    let t = model.tables();
    let (s, a, z) = (t.num_states, t.num_actions, t.num_obs);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "pomdp v1 {s} {a} {z} {} {:.16e} {:.16e}",
        t.horizon,
        t.r_max.unwrap_or(0.0),
        t.discount
    );
    out.push_str("prior\n");
    row(&mut out, &t.prior);
    for act in 0..a {
        let _ = writeln!(out, "T {act}");
        for x in 0..s {
            row(&mut out, &t.transition[(x * a + act) * s..(x * a + act + 1) * s]);
        }
    }
    out.push_str("O\n");
    for x in 0..s {
        row(&mut out, &t.observation[x * z..(x + 1) * z]);
    }
    out.push_str("R\n");
    for x in 0..s {
        row(&mut out, &t.reward[x * a..(x + 1) * a]);
    }
    out
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TabularPomdp, ModelError> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn save_model(model: &TabularPomdp, path: impl AsRef<Path>) -> Result<(), ModelError> {
    Ok(std::fs::write(path, format_model(model))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::EnvKind;

    #[test]
    fn builtins_round_trip() {
        for env in EnvKind::ALL {
            let m = env.build(None).unwrap();
            let text = format_model(&m);
            let back = parse_model(&text).unwrap();
            assert_eq!(back, m, "{env}");
            assert_eq!(format_model(&back), text);
        }
    }

    #[test]
    fn comments_and_block_order() {
        let text = "# coin\npomdp v1 1 1 1 0 2 1\nR 2 # reward\nO 1\nT 0\n1\nprior 1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.reward(0, 0), 2.0);
    }

    #[test]
    fn errors_name_the_line() {
        match parse_model("pomdp v1 1 1 1 0 2 1\nprior 1\nT 0\nx\n") {
            Err(ModelError::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("'x'"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_model("pomdp v1 1 1 1 0 2 1\nprior 1\nT 0 1\nO 1\n"), Err(ModelError::Parse { .. })));
        assert!(matches!(parse_model("pomdp v1 1 1 1 0 2 1\nprior 0.5\nT 0 1\nO 1\nR 0\n"), Err(ModelError::Invalid(_))));
    }
}
