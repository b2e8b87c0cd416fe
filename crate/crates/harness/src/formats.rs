//! JSON and CSV encodings. Every float is written with 17 significant digits
//! so a file parses back to the identical bits.

use std::io;

use implicit_td::environments::{FeatureMap, MarkovRewardEnvironment, RewardModel};
use implicit_td::numerics::Matrix;
use implicit_td::oracle::OracleBundle;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{HarnessError, Result};

/// `x` with 17 significant digits; non-finite values as `inf`, `-inf`, `NaN`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| HarnessError::Parse { what: "number", message: s.to_owned() })
}

/// Pretty JSON whose floats carry 17 significant digits.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Exact17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

struct Exact17<'a>(PrettyFormatter<'a>);

impl Formatter for Exact17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
pub struct EnvMeta {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Environment plus features. Matrices are flattened row-major; `reward` has
/// `n_states` entries (per state) or `n_states²` (per transition); `rho` is
/// present only for off-policy environments.
#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub n_states: usize,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub gamma: f64,
    #[serde(default)]
    pub absorbing: Vec<usize>,
    pub restart_state: usize,
    pub d: usize,
    pub phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    pub meta: EnvMeta,
}

impl EnvironmentFile {
    pub fn new(env: &MarkovRewardEnvironment, features: &FeatureMap) -> Self {
        let reward = match env.reward_model() {
            RewardModel::PerState(r) => r.clone(),
            RewardModel::PerTransition(m) => m.as_slice().to_vec(),
        };
        EnvironmentFile {
            n_states: env.n_states(),
            transition: env.transition().as_slice().to_vec(),
            reward,
            gamma: env.gamma(),
            absorbing: env.absorbing().to_vec(),
            restart_state: env.restart_state(),
            d: features.d(),
            phi: features.matrix().as_slice().to_vec(),
            rho: env.importance().map(|m| m.as_slice().to_vec()),
            meta: EnvMeta { name: env.name().to_owned(), seed: env.seed() },
        }
    }

    pub fn build(&self) -> Result<(MarkovRewardEnvironment, FeatureMap)> {
        let n = self.n_states;
        let square = |data: &[f64], what: &str| {
            Matrix::new(n, n, data.to_vec()).map_err(|e| HarnessError::Parse { what: "environment", message: format!("{what}: {e}") })
        };
        let transition = square(&self.transition, "transition")?;
        let reward = if self.reward.len() == n {
            RewardModel::PerState(self.reward.clone())
        } else {
            RewardModel::PerTransition(square(&self.reward, "reward")?)
        };
        let rho = self.rho.as_deref().map(|r| square(r, "rho")).transpose()?;
        let env = MarkovRewardEnvironment::new(
            self.meta.name.clone(),
            transition,
            reward,
            self.gamma,
            self.absorbing.clone(),
            self.restart_state,
            rho,
        )?
        .with_seed(self.meta.seed);
        let phi = Matrix::new(n, self.d, self.phi.clone())
            .map_err(|e| HarnessError::Parse { what: "environment", message: format!("phi: {e}") })?;
        Ok((env, FeatureMap::new(phi)?))
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse { what: "environment JSON", message: e.to_string() })
    }
}

/// Row-major matrix as written to JSON.
#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Matrix> for MatrixFile {
    fn from(m: &Matrix) -> Self {
        MatrixFile { rows: m.rows(), cols: m.cols(), data: m.as_slice().to_vec() }
    }
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<Matrix> {
        Matrix::new(self.rows, self.cols, self.data.clone())
            .map_err(|e| HarnessError::Parse { what: "matrix", message: e.to_string() })
    }
}

/// Serialized [`OracleBundle`]; regression snapshots compare these.
#[derive(Clone, Debug, PartialEq, SerializeDerive, Deserialize)]
pub struct OracleFile {
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub sigma: MatrixFile,
    pub a: MatrixFile,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixFile>,
    pub w_star: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_least_squares: Option<Vec<f64>>,
    pub v_star: Vec<f64>,
    pub lambda_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    pub rho_max: f64,
    pub value_weights: Vec<f64>,
    pub fixed_point_residual: f64,
}

impl From<&OracleBundle> for OracleFile {
    fn from(o: &OracleBundle) -> Self {
        OracleFile {
            lambda: o.lambda,
            mu: o.mu.clone(),
            sigma: (&o.sigma).into(),
            a: (&o.a).into(),
            b: o.b.clone(),
            c: o.c.as_ref().map(Into::into),
            w_star: o.w_star.clone(),
            w_least_squares: o.w_least_squares.clone(),
            v_star: o.v_star.clone(),
            lambda_min: o.lambda_min,
            lambda_c: o.lambda_c,
            rho_max: o.rho_max,
            value_weights: o.value_weights.clone(),
            fixed_point_residual: o.fixed_point_residual(),
        }
    }
}

impl OracleFile {
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse { what: "oracle JSON", message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use implicit_td::environments::{make_baird, make_random_mrp, make_random_walk};
    use implicit_td::numerics::RngStream;
    use proptest::prelude::*;

    #[test]
    fn environments_round_trip_bit_exactly() {
        let envs = [
            make_random_walk(11, 0.9, 5).unwrap(),
            make_random_mrp(30, 6, 0.9, &mut RngStream::new(4, 0)).unwrap(),
            make_baird(),
        ];
        for (env, phi) in envs {
            let file = EnvironmentFile::new(&env, &phi);
            let text = file.to_json();
            let back = EnvironmentFile::from_json(&text).unwrap();
            assert_eq!(back, file);
            let (env2, phi2) = back.build().unwrap();
            assert_eq!(env2, env);
            assert_eq!(phi2, phi);
        }
    }

    #[test]
    fn oracle_round_trips() {
        let (env, phi) = make_baird();
        let o = OracleBundle::compute(&env, &phi, 0.0).unwrap();
        let file = OracleFile::from(&o);
        let back = OracleFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.c.unwrap().to_matrix().unwrap(), o.c.unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        let (env, phi) = make_random_walk(5, 0.9, 2).unwrap();
        let mut file = EnvironmentFile::new(&env, &phi);
        file.phi.pop();
        assert!(file.build().is_err());
        let mut file = EnvironmentFile::new(&env, &phi);
        file.transition[0] = 0.5;
        assert!(file.build().is_err());
    }

    #[test]
    fn non_finite_formatting() {
        assert_eq!(fmt17(f64::INFINITY), "inf");
        assert_eq!(parse_f64("inf").unwrap(), f64::INFINITY);
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert!(parse_f64("abc").is_err());
    }

    proptest! {
        #[test]
        fn fmt17_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(parse_f64(&fmt17(x)).unwrap().to_bits(), x.to_bits());
        }
    }
}
