//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's update or planning code.
#![allow(dead_code)]

use rand::Rng;

/// Dense POMDP: `t[a][s][s']`, `z[a][s'][o]`, `r[a][s][s']`.
#[derive(Debug, Clone)]
pub struct Flat {
    pub t: Vec<Vec<Vec<f64>>>,
    pub z: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<Vec<f64>>>,
}

impl Flat {
    pub fn ns(&self) -> usize {
        self.t[0].len()
    }
    pub fn na(&self) -> usize {
        self.t.len()
    }
    pub fn no(&self) -> usize {
        self.z[0][0].len()
    }

    /// Tiger with listen accuracy `p`: states (left, right), actions
    /// (listen, open-left, open-right), observations (growl-left, growl-right).
    pub fn tiger(p: f64) -> Self {
        let listen_t = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let reset = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let listen_z = vec![vec![p, 1.0 - p], vec![1.0 - p, p]];
        let blind = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        Self {
            t: vec![listen_t, reset.clone(), reset],
            z: vec![listen_z, blind.clone(), blind],
            r: vec![
                vec![vec![-1.0; 2]; 2],
                vec![vec![-100.0; 2], vec![10.0; 2]],
                vec![vec![10.0; 2], vec![-100.0; 2]],
            ],
        }
    }

    /// Random model with strictly positive rows.
    pub fn random(ns: usize, na: usize, no: usize, rng: &mut impl Rng) -> Self {
        let mut row = |n: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        };
        let t = (0..na).map(|_| (0..ns).map(|_| row(ns)).collect()).collect();
        let z = (0..na).map(|_| (0..ns).map(|_| row(no)).collect()).collect();
        let r = (0..na)
            .map(|_| (0..ns).map(|_| (0..ns).map(|_| rng.random_range(-10.0..10.0)).collect()).collect())
            .collect();
        Self { t, z, r }
    }

    /// Double-loop Bayes rule.
    pub fn bayes(&self, b: &[f64], a: usize, o: usize) -> Option<Vec<f64>> {
        let ns = self.ns();
        let mut next = vec![0.0; ns];
        for sp in 0..ns {
            let mut predicted = 0.0;
            for s in 0..ns {
                predicted += self.t[a][s][sp] * b[s];
            }
            next[sp] = self.z[a][sp][o] * predicted;
        }
        let total: f64 = next.iter().sum();
        (total > 0.0).then(|| next.into_iter().map(|x| x / total).collect())
    }

    /// `Pr(o | b, a)`.
    pub fn obs_prob(&self, b: &[f64], a: usize, o: usize) -> f64 {
        let ns = self.ns();
        let mut total = 0.0;
        for s in 0..ns {
            for sp in 0..ns {
                total += b[s] * self.t[a][s][sp] * self.z[a][sp][o];
            }
        }
        total
    }

    /// Expected immediate reward of `a` under `b`.
    pub fn reward(&self, b: &[f64], a: usize) -> f64 {
        let ns = self.ns();
        let mut total = 0.0;
        for s in 0..ns {
            for sp in 0..ns {
                total += b[s] * self.t[a][s][sp] * self.r[a][s][sp];
            }
        }
        total
    }

    /// Finite-horizon optimal value by exhaustive expectimax over beliefs.
    pub fn expectimax(&self, b: &[f64], horizon: usize, gamma: f64) -> f64 {
        if horizon == 0 {
            return 0.0;
        }
        (0..self.na())
            .map(|a| {
                let mut q = self.reward(b, a);
                for o in 0..self.no() {
                    let p = self.obs_prob(b, a, o);
                    if p > 0.0 {
                        let next = self.bayes(b, a, o).expect("positive mass");
                        q += gamma * p * self.expectimax(&next, horizon - 1, gamma);
                    }
                }
                q
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Uniformly random point on the simplex.
pub fn random_belief(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub mod files;
pub mod mos;
