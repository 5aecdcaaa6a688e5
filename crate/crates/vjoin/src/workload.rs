//! Synthetic and file-backed workloads for benchmarks and tests.
//!
//! Every generator is deterministic in the spec's seed: centers, data and
//! queries draw from separate ChaCha streams so changing one count never
//! reshuffles the others.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::formats::load_vectors;
use crate::store::VectorStore;

/// Cluster radius shared by the gaussian and ball generators; spreads are
/// expressed relative to it.
const CLUSTER_RADIUS: f32 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Gaussian blobs around uniform centers; queries from the same mixture.
    GaussianClusters,
    /// Uniform points in the unit cube.
    UniformCube,
    /// Two uniform balls with a wide gap; every query sits far off to the
    /// side, out of distribution by construction.
    OodDisplaced,
    /// One gaussian mixture joined with itself.
    SelfJoin,
    /// Vectors read from fvecs/bvecs files.
    FileBacked,
}

impl Generator {
    pub fn token(&self) -> &'static str {
        match self {
            Generator::GaussianClusters => "gaussian-clusters",
            Generator::UniformCube => "uniform-cube",
            Generator::OodDisplaced => "ood-displaced",
            Generator::SelfJoin => "self-join",
            Generator::FileBacked => "file",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-clusters" => Ok(Generator::GaussianClusters),
            "uniform-cube" => Ok(Generator::UniformCube),
            "ood-displaced" => Ok(Generator::OodDisplaced),
            "self-join" => Ok(Generator::SelfJoin),
            "file" => Ok(Generator::FileBacked),
            other => Err(Error::config(format!(
                "unknown generator {:?}; expected gaussian-clusters, uniform-cube, ood-displaced, self-join, or file",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub generator: Generator,
    pub dim: usize,
    pub data_count: usize,
    pub query_count: usize,
    pub cluster_count: usize,
    /// Distance of the query cloud from the data midpoint, in cluster radii.
    pub ood_displacement: f32,
    pub rng_seed: u64,
    pub data_path: Option<PathBuf>,
    pub query_path: Option<PathBuf>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            generator: Generator::GaussianClusters,
            dim: 16,
            data_count: 1000,
            query_count: 100,
            cluster_count: 8,
            ood_displacement: 10.0,
            rng_seed: 42,
            data_path: None,
            query_path: None,
        }
    }
}

impl WorkloadSpec {
    /// Pulls this spec's keys out of `kv`, leaving other keys untouched.
    pub fn from_kv(kv: &mut KvConfig) -> Result<WorkloadSpec> {
        let mut spec = WorkloadSpec::default();
        if let Some(g) = kv.take_parsed::<Generator>("generator")? {
            spec.generator = g;
        }
        if let Some(v) = kv.take_parsed::<usize>("dim")? {
            spec.dim = v;
        }
        if let Some(v) = kv.take_parsed::<usize>("data_count")? {
            spec.data_count = v;
        }
        if let Some(v) = kv.take_parsed::<usize>("query_count")? {
            spec.query_count = v;
        }
        if let Some(v) = kv.take_parsed::<usize>("cluster_count")? {
            spec.cluster_count = v;
        }
        if let Some(v) = kv.take_parsed::<f32>("ood_displacement")? {
            spec.ood_displacement = v;
        }
        if let Some(v) = kv.take_parsed::<u64>("seed")? {
            spec.rng_seed = v;
        }
        spec.data_path = kv.take("data_path").map(PathBuf::from);
        spec.query_path = kv.take("query_path").map(PathBuf::from);
        Ok(spec)
    }
}

/// A realized workload. `queries` is `None` for self-joins: callers pass
/// the data store for both sides so the engine sees one store identity.
#[derive(Debug, Clone)]
pub struct Workload {
    pub data: VectorStore,
    pub queries: Option<VectorStore>,
}

impl Workload {
    /// The query side; the data store itself for self-joins.
    pub fn query_store(&self) -> &VectorStore {
        self.queries.as_ref().unwrap_or(&self.data)
    }
}

fn stream(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

fn gaussian_point(rng: &mut ChaCha8Rng, center: &[f32], sigma: f32) -> Vec<f32> {
    center
        .iter()
        .map(|c| {
            let z: f32 = rng.sample(StandardNormal);
            c + z * sigma
        })
        .collect()
}

/// Uniform point in a ball: gaussian direction scaled by U^(1/dim).
fn ball_point(rng: &mut ChaCha8Rng, center: &[f32], radius: f32) -> Vec<f32> {
    let dim = center.len();
    let dir: Vec<f32> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let r = radius as f64 * (rng.random_range(0.0f64..1.0)).powf(1.0 / dim as f64);
    let scale = if norm == 0.0 { 0.0 } else { r / norm };
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + (*d as f64 * scale) as f32)
        .collect()
}

fn mixture(spec: &WorkloadSpec, centers: &[Vec<f32>], count: usize, lane: u64) -> VectorStore {
    let sigma = CLUSTER_RADIUS / (spec.dim as f32).sqrt();
    let mut rng = stream(spec.rng_seed, lane);
    let mut s = VectorStore::with_dim(spec.dim).expect("dim validated");
    for _ in 0..count {
        let c = rng.random_range(0..centers.len());
        s.push(&gaussian_point(&mut rng, &centers[c], sigma));
    }
    s
}

pub fn generate(spec: &WorkloadSpec) -> Result<Workload> {
    if spec.generator != Generator::FileBacked {
        if spec.dim == 0 {
            return Err(Error::config("dim must be at least 1"));
        }
        if spec.data_count == 0 {
            return Err(Error::config("data_count must be at least 1"));
        }
    }
    match spec.generator {
        Generator::GaussianClusters | Generator::SelfJoin => {
            if spec.cluster_count == 0 {
                return Err(Error::config("cluster_count must be at least 1"));
            }
            let mut crng = stream(spec.rng_seed, 1);
            let centers: Vec<Vec<f32>> = (0..spec.cluster_count)
                .map(|_| {
                    (0..spec.dim)
                        .map(|_| crng.random_range(-4.0f32..4.0))
                        .collect()
                })
                .collect();
            let data = mixture(spec, &centers, spec.data_count, 2);
            let queries = if spec.generator == Generator::SelfJoin {
                None
            } else {
                if spec.query_count == 0 {
                    return Err(Error::config("query_count must be at least 1"));
                }
                Some(mixture(spec, &centers, spec.query_count, 3))
            };
            Ok(Workload { data, queries })
        }
        Generator::UniformCube => {
            if spec.query_count == 0 {
                return Err(Error::config("query_count must be at least 1"));
            }
            let fill = |lane: u64, count: usize| {
                let mut rng = stream(spec.rng_seed, lane);
                let mut s = VectorStore::with_dim(spec.dim).expect("dim validated");
                for _ in 0..count {
                    let row: Vec<f32> = (0..spec.dim)
                        .map(|_| rng.random_range(0.0f32..1.0))
                        .collect();
                    s.push(&row);
                }
                s
            };
            Ok(Workload {
                data: fill(2, spec.data_count),
                queries: Some(fill(3, spec.query_count)),
            })
        }
        Generator::OodDisplaced => {
            if spec.dim < 2 {
                return Err(Error::config("ood-displaced needs dim >= 2"));
            }
            if spec.query_count == 0 {
                return Err(Error::config("query_count must be at least 1"));
            }
            if !(spec.ood_displacement.is_finite() && spec.ood_displacement > 0.0) {
                return Err(Error::config(
                    "ood_displacement must be finite and positive",
                ));
            }
            // Two balls on the first axis, a 10-radius gap between centers;
            // queries hover over the midpoint, displaced along the second
            // axis and jittered within half a radius.
            let gap = 10.0 * CLUSTER_RADIUS;
            let mut center_a = vec![0.0f32; spec.dim];
            let mut center_b = vec![0.0f32; spec.dim];
            center_a[0] = -gap / 2.0;
            center_b[0] = gap / 2.0;
            let mut drng = stream(spec.rng_seed, 2);
            let mut data = VectorStore::with_dim(spec.dim).expect("dim validated");
            for i in 0..spec.data_count {
                let c = if i % 2 == 0 { &center_a } else { &center_b };
                data.push(&ball_point(&mut drng, c, CLUSTER_RADIUS));
            }
            let mut qrng = stream(spec.rng_seed, 3);
            let mut q_center = vec![0.0f32; spec.dim];
            q_center[1] = spec.ood_displacement * CLUSTER_RADIUS;
            let mut queries = VectorStore::with_dim(spec.dim).expect("dim validated");
            for _ in 0..spec.query_count {
                queries.push(&ball_point(&mut qrng, &q_center, 0.5 * CLUSTER_RADIUS));
            }
            Ok(Workload {
                data,
                queries: Some(queries),
            })
        }
        Generator::FileBacked => {
            let data_path = spec
                .data_path
                .as_ref()
                .ok_or_else(|| Error::config("file workload needs data_path"))?;
            let data = load_vectors(data_path)?;
            let queries = match &spec.query_path {
                Some(p) => {
                    let q = load_vectors(p)?;
                    if q.dim() != data.dim() {
                        return Err(Error::config(format!(
                            "query file dimension {} != data file dimension {}",
                            q.dim(),
                            data.dim()
                        )));
                    }
                    Some(q)
                }
                None => None,
            };
            Ok(Workload { data, queries })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::save_fvecs;
    use crate::store::l2_distance;

    #[test]
    fn generation_is_deterministic_and_stream_separated() {
        let spec = WorkloadSpec {
            data_count: 50,
            query_count: 10,
            dim: 4,
            ..WorkloadSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.data.as_flat(), b.data.as_flat());
        assert_eq!(
            a.queries.as_ref().unwrap().as_flat(),
            b.queries.as_ref().unwrap().as_flat()
        );

        // Growing the data does not change the queries.
        let bigger = WorkloadSpec {
            data_count: 80,
            ..spec.clone()
        };
        let c = generate(&bigger).unwrap();
        assert_eq!(
            a.queries.as_ref().unwrap().as_flat(),
            c.queries.as_ref().unwrap().as_flat()
        );
        assert_eq!(&c.data.as_flat()[..50 * 4], a.data.as_flat());

        let reseeded = WorkloadSpec {
            rng_seed: 43,
            ..spec
        };
        let d = generate(&reseeded).unwrap();
        assert_ne!(a.data.as_flat(), d.data.as_flat());
    }

    #[test]
    fn uniform_cube_stays_in_bounds() {
        let spec = WorkloadSpec {
            generator: Generator::UniformCube,
            dim: 3,
            data_count: 200,
            query_count: 20,
            ..WorkloadSpec::default()
        };
        let w = generate(&spec).unwrap();
        assert_eq!(w.data.count(), 200);
        assert!(w.data.as_flat().iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn ood_displaced_geometry() {
        let spec = WorkloadSpec {
            generator: Generator::OodDisplaced,
            dim: 8,
            data_count: 1000,
            query_count: 32,
            ood_displacement: 10.0,
            ..WorkloadSpec::default()
        };
        let w = generate(&spec).unwrap();
        let q = w.queries.as_ref().unwrap();
        // Data points live in one of the two unit balls.
        let mut center_a = vec![0.0f32; 8];
        let mut center_b = vec![0.0f32; 8];
        center_a[0] = -5.0;
        center_b[0] = 5.0;
        let mut split = [0usize; 2];
        for i in 0..w.data.count() as u32 {
            let da = l2_distance(w.data.get(i), &center_a);
            let db = l2_distance(w.data.get(i), &center_b);
            assert!(da.min(db) <= 1.0 + 1e-5);
            split[if da < db { 0 } else { 1 }] += 1;
        }
        assert_eq!(split, [500, 500]);
        // Every query is far from every data point: the nearest possible
        // approach is sqrt(5^2 + 10^2) - 1 - 0.5 from either ball.
        let floor = (125.0f64.sqrt() - 1.5) as f32;
        for qi in 0..q.count() as u32 {
            for di in 0..w.data.count() as u32 {
                assert!(l2_distance(q.get(qi), w.data.get(di)) > floor);
            }
        }
    }

    #[test]
    fn self_join_workload_has_no_query_store() {
        let spec = WorkloadSpec {
            generator: Generator::SelfJoin,
            dim: 3,
            data_count: 40,
            ..WorkloadSpec::default()
        };
        let w = generate(&spec).unwrap();
        assert!(w.queries.is_none());
        assert!(std::ptr::eq(w.query_store(), &w.data));
    }

    #[test]
    fn file_backed_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("d.fvecs");
        let spec = WorkloadSpec {
            dim: 4,
            data_count: 30,
            query_count: 5,
            ..WorkloadSpec::default()
        };
        let w = generate(&spec).unwrap();
        save_fvecs(&w.data, &data_path).unwrap();
        let loaded = generate(&WorkloadSpec {
            generator: Generator::FileBacked,
            data_path: Some(data_path),
            query_path: None,
            ..WorkloadSpec::default()
        })
        .unwrap();
        assert_eq!(loaded.data.as_flat(), w.data.as_flat());
        assert!(loaded.queries.is_none());
    }

    #[test]
    fn bad_specs_error() {
        assert!(generate(&WorkloadSpec {
            dim: 0,
            ..WorkloadSpec::default()
        })
        .is_err());
        assert!(generate(&WorkloadSpec {
            generator: Generator::OodDisplaced,
            dim: 1,
            ..WorkloadSpec::default()
        })
        .is_err());
        assert!(generate(&WorkloadSpec {
            generator: Generator::FileBacked,
            data_path: None,
            ..WorkloadSpec::default()
        })
        .is_err());
        assert!("blobs".parse::<Generator>().is_err());
    }
}
