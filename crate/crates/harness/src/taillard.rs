//! Taillard flow shop benchmark: text format, generator and instance names.

use std::fmt::Write as _;
use std::path::Path;

use nwfs_core::{Instance, Time};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaillardHeader {
    pub n_jobs: usize,
    pub n_machines: usize,
    pub seed: Option<u64>,
    pub upper_bound: Option<Time>,
    pub lower_bound: Option<Time>,
}

impl TaillardHeader {
    pub fn new(n_jobs: usize, n_machines: usize) -> Self {
        Self {
            n_jobs,
            n_machines,
            seed: None,
            upper_bound: None,
            lower_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaillardInstance {
    pub header: TaillardHeader,
    pub instance: Instance,
}

/// A numeric line split into (column, value) tokens.
struct Row {
    line: usize,
    tokens: Vec<(usize, u64)>,
}

fn tokenize(text: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_start();
        // label lines such as "processing times :" or the verbose header caption
        if trimmed.is_empty() || trimmed.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let mut tokens = Vec::new();
        let mut column = 0;
        for piece in raw.split_inclusive(char::is_whitespace) {
            let token = piece.trim_end();
            if !token.is_empty() {
                let value = token.parse::<u64>().map_err(|_| HarnessError::Parse {
                    line,
                    column: column + 1,
                    message: format!("`{token}` is not a non-negative integer"),
                })?;
                tokens.push((column + 1, value));
            }
            column += piece.chars().count();
        }
        rows.push(Row { line, tokens });
    }
    Ok(rows)
}

fn parse_header(row: &Row) -> Result<TaillardHeader> {
    let k = row.tokens.len();
    if !(2..=5).contains(&k) {
        return Err(HarnessError::Parse {
            line: row.line,
            column: 1,
            message: format!("header needs 2 to 5 integers, found {k}"),
        });
    }
    let value = |i: usize| row.tokens.get(i).map(|t| t.1);
    let header = TaillardHeader {
        n_jobs: value(0).unwrap() as usize,
        n_machines: value(1).unwrap() as usize,
        seed: value(2),
        upper_bound: value(3),
        lower_bound: value(4),
    };
    if header.n_jobs == 0 || header.n_machines == 0 {
        return Err(HarnessError::Parse {
            line: row.line,
            column: 1,
            message: "job and machine counts must be positive".into(),
        });
    }
    Ok(header)
}

fn parse_block(header: &Row, body: &[Row]) -> Result<TaillardInstance> {
    let head = parse_header(header)?;
    let (n, m) = (head.n_jobs, head.n_machines);
    if body.len() < m {
        let line = body.last().unwrap_or(header).line;
        return Err(HarnessError::Parse {
            line,
            column: 1,
            message: format!("expected {m} machine rows, found {}", body.len()),
        });
    }
    let mut proc = vec![0; n * m];
    for (machine, row) in body.iter().take(m).enumerate() {
        if row.tokens.len() != n {
            return Err(HarnessError::Parse {
                line: row.line,
                column: row.tokens.get(n).map_or(1, |t| t.0),
                message: format!("expected {n} processing times, found {}", row.tokens.len()),
            });
        }
        for (job, &(column, value)) in row.tokens.iter().enumerate() {
            if value < 1 {
                return Err(HarnessError::Parse {
                    line: row.line,
                    column,
                    message: "processing times must be at least 1".into(),
                });
            }
            proc[job * m + machine] = value;
        }
    }
    Ok(TaillardInstance {
        header: head,
        instance: Instance::from_flat(n, m, proc)?,
    })
}

/// Parses one instance: a header, then one row per machine.
pub fn parse_taillard(text: &str) -> Result<TaillardInstance> {
    let rows = tokenize(text)?;
    let Some((header, body)) = rows.split_first() else {
        return Err(HarnessError::Parse {
            line: 1,
            column: 1,
            message: "no header line".into(),
        });
    };
    let parsed = parse_block(header, body)?;
    if let Some(extra) = body.get(parsed.header.n_machines) {
        return Err(HarnessError::Parse {
            line: extra.line,
            column: 1,
            message: format!(
                "expected {} machine rows, found more",
                parsed.header.n_machines
            ),
        });
    }
    Ok(parsed)
}

/// Parses a file holding several instances back to back.
pub fn parse_taillard_many(text: &str) -> Result<Vec<TaillardInstance>> {
    let rows = tokenize(text)?;
    let mut out = Vec::new();
    let mut rest = rows.as_slice();
    while let Some((header, body)) = rest.split_first() {
        let parsed = parse_block(header, body)?;
        rest = &body[parsed.header.n_machines..];
        out.push(parsed);
    }
    Ok(out)
}

/// Writes the machine-major text layout read by [`parse_taillard`].
pub fn serialize_taillard(header: &TaillardHeader, inst: &Instance) -> String {
    let mut out = String::new();
    let fields = [header.seed, header.upper_bound, header.lower_bound];
    let present = fields.iter().rposition(Option::is_some).map_or(0, |i| i + 1);
    out.push_str("number of jobs, number of machines, initial seed, upper bound and lower bound :\n");
    let _ = write!(out, "{:>12}{:>12}", inst.n_jobs(), inst.n_machines());
    for f in &fields[..present] {
        let _ = write!(out, "{:>12}", f.unwrap_or(0));
    }
    out.push_str("\nprocessing times :\n");
    for machine in 0..inst.n_machines() {
        for job in 0..inst.n_jobs() {
            let _ = write!(out, "{:>3}", inst.proc(job, machine));
            out.push(if job + 1 == inst.n_jobs() { '\n' } else { ' ' });
        }
    }
    out
}

/// Portable minimal-standard generator used by the benchmark.
#[derive(Debug, Clone)]
pub struct TaillardLcg {
    state: i64,
}

impl TaillardLcg {
    const A: i64 = 16807;
    const M: i64 = 2_147_483_647;
    const B: i64 = 127_773;
    const C: i64 = 2836;

    pub fn new(seed: u64) -> Result<Self> {
        let state = (seed % Self::M as u64) as i64;
        if state == 0 {
            return Err(HarnessError::Input(
                "generator seed must not be 0 (mod 2^31-1)".into(),
            ));
        }
        Ok(Self { state })
    }

    /// Uniform integer on [low, high].
    pub fn uniform(&mut self, low: i64, high: i64) -> i64 {
        let k = self.state / Self::B;
        self.state = Self::A * (self.state % Self::B) - k * Self::C;
        if self.state < 0 {
            self.state += Self::M;
        }
        let u = self.state as f64 / Self::M as f64;
        low + (u * (high - low + 1) as f64).floor() as i64
    }
}

/// Times uniform on [1, 99], drawn machine by machine.
pub fn generate_instance(n_jobs: usize, n_machines: usize, seed: u64) -> Result<Instance> {
    if n_jobs == 0 || n_machines == 0 {
        return Err(HarnessError::Input(format!(
            "need at least one job and one machine, got {n_jobs}x{n_machines}"
        )));
    }
    let mut rng = TaillardLcg::new(seed)?;
    let mut proc = vec![0; n_jobs * n_machines];
    for machine in 0..n_machines {
        for job in 0..n_jobs {
            proc[job * n_machines + machine] = rng.uniform(1, 99) as Time;
        }
    }
    Ok(Instance::from_flat(n_jobs, n_machines, proc)?)
}

/// Size classes in benchmark order, ten instances each.
pub const SIZE_CLASSES: [(usize, usize); 12] = [
    (20, 5),
    (20, 10),
    (20, 20),
    (50, 5),
    (50, 10),
    (50, 20),
    (100, 5),
    (100, 10),
    (100, 20),
    (200, 10),
    (200, 20),
    (500, 20),
];

/// Published generator seeds of ta001..ta120.
pub const SEEDS: [u64; 120] = [
    873654221, 379008056, 1866992158, 216771124, 495070989, 402959317, 1369363414, 2021925980,
    573109518, 88325120, //
    587595453, 1401007982, 873136276, 268827376, 1634173168, 691823909, 73807235, 1273398721,
    2065119309, 1672900551, //
    479340445, 268827376, 1958948863, 918272953, 555010963, 2010851491, 1519833303, 1748670931,
    1923497586, 1829909967, //
    1328042058, 200382020, 496319842, 1203030903, 1730708564, 450926852, 1303135678, 1273398721,
    587288402, 248421594, //
    1958948863, 575633267, 655816003, 1977864101, 93805469, 1803345551, 49612559, 1899802599,
    2013025619, 578962478, //
    1539989115, 691823909, 655816003, 1315102446, 1949668355, 1923497586, 1805594913, 1861070898,
    715643788, 464843328, //
    896678084, 1179439976, 1122278347, 416756875, 267829958, 1835213917, 1328833962, 1418570761,
    161033112, 304212574, //
    1539989115, 655816003, 960914243, 1915696806, 2013025619, 1168140026, 1923497586, 167698528,
    1528387973, 993794175, //
    450926852, 1462772409, 1021685265, 83696007, 508154254, 1861070898, 26482542, 444956424,
    2115448041, 118254244, //
    471503978, 1215892992, 135346136, 1602504050, 160037322, 551454346, 519485142, 383947510,
    1968171878, 540872513, //
    2013025619, 475051709, 914834335, 810642687, 1019331795, 2056065863, 1342855162, 1325809384,
    1988803007, 765656702, //
    1368624604, 450181436, 1927888393, 1759567256, 606425239, 19268348, 1298201670, 2041736264,
    379756761, 28837162,
];

/// Benchmark index 1..=120 of names like `ta023`, `Ta23` or `TA023`.
pub fn benchmark_index(name: &str) -> Option<usize> {
    let lower = name.trim().to_ascii_lowercase();
    let digits = lower.strip_prefix("ta")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let idx: usize = digits.parse().ok()?;
    (1..=120).contains(&idx).then_some(idx)
}

/// Canonical name `taNNN`.
pub fn benchmark_name(index: usize) -> String {
    format!("ta{index:03}")
}

/// Header (size and seed) of benchmark instance `index` in 1..=120.
pub fn benchmark_header(index: usize) -> Option<TaillardHeader> {
    let (n, m) = *SIZE_CLASSES.get((index.checked_sub(1)?) / 10)?;
    Some(TaillardHeader {
        seed: Some(SEEDS[index - 1]),
        ..TaillardHeader::new(n, m)
    })
}

/// Regenerates benchmark instance `index` from its published seed.
pub fn benchmark_instance(index: usize) -> Result<TaillardInstance> {
    let header = benchmark_header(index)
        .ok_or_else(|| HarnessError::UnknownInstance(benchmark_name(index)))?;
    let instance = generate_instance(header.n_jobs, header.n_machines, header.seed.unwrap())?;
    Ok(TaillardInstance { header, instance })
}

pub fn read_taillard(path: &Path) -> Result<TaillardInstance> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_taillard(&text).map_err(|e| HarnessError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A resolved instance with the name used for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstance {
    pub name: String,
    pub header: TaillardHeader,
    pub instance: Instance,
}

/// Resolves `spec` as an existing file, then as `taNNN` (a `taNNN.txt` under
/// `data_dir` wins over the built-in generator).
pub fn resolve_instance(spec: &str, data_dir: Option<&Path>) -> Result<NamedInstance> {
    let path = Path::new(spec);
    if path.is_file() {
        let parsed = read_taillard(path)?;
        let name = path
            .file_stem()
            .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
        let name = benchmark_index(&name).map_or(name, benchmark_name);
        return Ok(NamedInstance {
            name,
            header: parsed.header,
            instance: parsed.instance,
        });
    }
    let index = benchmark_index(spec).ok_or_else(|| HarnessError::UnknownInstance(spec.into()))?;
    let name = benchmark_name(index);
    if let Some(dir) = data_dir {
        let file = dir.join(format!("{name}.txt"));
        if file.is_file() {
            let parsed = read_taillard(&file)?;
            return Ok(NamedInstance {
                name,
                header: parsed.header,
                instance: parsed.instance,
            });
        }
    }
    let parsed = benchmark_instance(index)?;
    Ok(NamedInstance {
        name,
        header: parsed.header,
        instance: parsed.instance,
    })
}
