//! Random `.pomdp` texts: one fully explicit, one using names, wildcards and
//! matrix forms, both describing the same model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct FilePair {
    pub explicit: Vec<String>,
    pub compact: Vec<String>,
    pub ns: usize,
    pub na: usize,
    pub no: usize,
}

fn row(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // small integer weights keep the decimal text short
    let w: Vec<u32> = (0..n).map(|_| rng.random_range(1..6)).collect();
    let total: u32 = w.iter().sum();
    w.into_iter().map(|x| f64::from(x) / f64::from(total)).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

pub fn generate(seed: u64) -> FilePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.random_range(1..=4);
    let na = rng.random_range(1..=3);
    let no = rng.random_range(1..=3);
    let discount = f64::from(rng.random_range(0..100)) / 100.0;

    let shared_t = rng.random_bool(0.3);
    let shared_row = row(ns, &mut rng);
    let mut t = vec![vec![vec![0.0; ns]; ns]; na];
    for a in 0..na {
        for s in 0..ns {
            t[a][s] = if shared_t { shared_row.clone() } else { row(ns, &mut rng) };
        }
    }
    let mut z = vec![vec![vec![0.0; no]; ns]; na];
    let mut z_uniform = vec![vec![false; ns]; na];
    for a in 0..na {
        for sp in 0..ns {
            z_uniform[a][sp] = rng.random_bool(0.3);
            z[a][sp] = if z_uniform[a][sp] { vec![1.0 / no as f64; no] } else { row(no, &mut rng) };
        }
    }
    let r: Vec<Vec<f64>> = (0..na)
        .map(|_| (0..ns).map(|_| f64::from(rng.random_range(-20..20))).collect())
        .collect();
    let start_subset: Vec<usize> = (0..ns).filter(|_| rng.random_bool(0.6)).collect();
    let start_subset = if start_subset.is_empty() { vec![0] } else { start_subset };

    let name = |prefix: &str, i: usize| format!("{prefix}{i}");

    // explicit: counts, indices, one entry per statement
    let mut explicit = vec![
        format!("discount: {discount}"),
        "values: reward".to_string(),
        format!("states: {ns}"),
        format!("actions: {na}"),
        format!("observations: {no}"),
    ];
    let mut start = vec![0.0; ns];
    for &s in &start_subset {
        start[s] = 1.0 / start_subset.len() as f64;
    }
    explicit.push(format!("start: {}", join(&start)));
    for a in 0..na {
        for s in 0..ns {
            for sp in 0..ns {
                explicit.push(format!("T: {a} : {s} : {sp} {}", t[a][s][sp]));
            }
        }
    }
    for a in 0..na {
        for sp in 0..ns {
            for o in 0..no {
                explicit.push(format!("O: {a} : {sp} : {o} {}", z[a][sp][o]));
            }
        }
    }
    for a in 0..na {
        for s in 0..ns {
            for sp in 0..ns {
                for o in 0..no {
                    explicit.push(format!("R: {a} : {s} : {sp} : {o} {}", r[a][s]));
                }
            }
        }
    }

    // compact: names, comments, wildcards, matrices
    let names = |prefix: &str, n: usize| (0..n).map(|i| name(prefix, i)).collect::<Vec<_>>().join(" ");
    let mut compact = vec![
        "# generated".to_string(),
        format!("discount: {discount}"),
        "values: reward".to_string(),
        format!("states: {}", names("s", ns)),
        format!("actions: {}", names("a", na)),
        format!("observations: {}", names("o", no)),
        String::new(),
        format!(
            "start include: {}",
            start_subset.iter().map(|&s| name("s", s)).collect::<Vec<_>>().join(" ")
        ),
    ];
    if shared_t {
        compact.push("T: *".to_string());
        for _ in 0..ns {
            compact.push(join(&shared_row));
        }
    } else {
        for a in 0..na {
            if rng.random_bool(0.5) {
                compact.push(format!("T: {}", name("a", a)));
                for s in 0..ns {
                    compact.push(format!("  {}", join(&t[a][s])));
                }
            } else {
                for s in 0..ns {
                    compact.push(format!("T: {} : {}", name("a", a), name("s", s)));
                    compact.push(join(&t[a][s]));
                }
            }
        }
    }
    for a in 0..na {
        for sp in 0..ns {
            compact.push(format!("O: {} : {}", name("a", a), name("s", sp)));
            compact.push(if z_uniform[a][sp] { "uniform".to_string() } else { join(&z[a][sp]) });
        }
    }
    for a in 0..na {
        for s in 0..ns {
            compact.push(format!("R: {} : {} : * : * {}   # constant", name("a", a), name("s", s), r[a][s]));
        }
    }
    FilePair { explicit, compact, ns, na, no }
}

/// Kind of invalid edit applied to an explicit file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    RowSum,
    Index,
    Discount,
}

/// Applies `mutation` to an explicit file. Returns the edited text and the
/// 1-based lines at which the error may be reported.
pub fn mutate(pair: &FilePair, mutation: Mutation, pick: usize) -> (String, Vec<usize>) {
    let mut lines = pair.explicit.clone();
    let t_lines: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].starts_with("T:")).collect();
    let allowed = match mutation {
        Mutation::Discount => {
            lines[0] = "discount: 1.5".to_string();
            vec![1]
        }
        Mutation::Index => {
            let i = t_lines[pick % t_lines.len()];
            let parts: Vec<&str> = lines[i].split(':').map(str::trim).collect();
            let (a, p) = (parts[1], parts[3].split_whitespace().nth(1).unwrap());
            lines[i] = format!("T: {a} : {} : 0 {p}", pair.ns);
            vec![i + 1]
        }
        Mutation::RowSum => {
            let i = t_lines[pick % t_lines.len()];
            let parts: Vec<String> = lines[i].split(':').map(|p| p.trim().to_string()).collect();
            let (a, s) = (parts[1].clone(), parts[2].clone());
            let mut tail = parts[3].split_whitespace();
            let sp = tail.next().unwrap().to_string();
            let p: f64 = tail.next().unwrap().parse().unwrap();
            let bumped = if p > 0.5 { p - 0.25 } else { p + 0.25 };
            lines[i] = format!("T: {a} : {s} : {sp} {bumped}");
            // any statement that wrote the row
            t_lines
                .iter()
                .filter(|&&j| {
                    let q: Vec<&str> = lines[j].split(':').map(str::trim).collect();
                    q[1] == a && q[2] == s
                })
                .map(|j| j + 1)
                .collect()
        }
    };
    (lines.join("\n") + "\n", allowed)
}
