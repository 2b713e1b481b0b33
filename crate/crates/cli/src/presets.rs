//! The three reference experiments.

use lowrank_core::estimate::OrderChoice;
use lowrank_core::RatTF;

use crate::config::{
    ArmaOrders, EstimationConfig, Kind, NoiseConfig, ScenarioConfig, SystemSpec, DEFAULT_BURN_IN,
};

pub const PRESET_NAMES: [&str; 3] = ["example1", "example2", "example3"];

fn z(num: &[f64], den: &[f64]) -> RatTF {
    RatTF::from_coeffs(num.to_vec(), den.to_vec()).expect("preset transfer function")
}

fn zinv(num: &[f64], den: &[f64]) -> RatTF {
    RatTF::from_delay(num, den).expect("preset transfer function")
}

/// `W1 = z³/((z-0.5)(z+0.5)(z-0.2))`, `W2 = z³/((z-0.5)(z-0.2)(z+0.1))`.
pub fn example1() -> ScenarioConfig {
    ScenarioConfig {
        scenario_id: "example1".into(),
        kind: Kind::LowRank,
        system: SystemSpec {
            w1: Some(z(&[0.0, 0.0, 0.0, 1.0], &[0.05, -0.25, -0.2, 1.0])),
            w2: Some(z(&[0.0, 0.0, 0.0, 1.0], &[0.01, 0.03, -0.6, 1.0])),
            ..Default::default()
        },
        n: 500,
        burn_in: DEFAULT_BURN_IN,
        noise: NoiseConfig {
            e_variance: 1.0,
            u_variance: None,
        },
        estimation: EstimationConfig {
            ar_order: Some(3),
            relation: Some(OrderChoice::Fixed { q: 1, r: 1 }),
            pin_b0: true,
            arma: None,
            arma_refine: true,
            input_orders: None,
            exact_chain: true,
        },
        runs: 100,
        master_seed: 1,
        output_dir: None,
    }
}

/// `W1 = (z+2)/(z-0.2)`, `W2 = (z-2)/(z-0.2)`; one run on a pinned seed.
pub fn example2() -> ScenarioConfig {
    ScenarioConfig {
        scenario_id: "example2".into(),
        kind: Kind::LowRank,
        system: SystemSpec {
            w1: Some(z(&[2.0, 1.0], &[-0.2, 1.0])),
            w2: Some(z(&[-2.0, 1.0], &[-0.2, 1.0])),
            ..Default::default()
        },
        n: 500,
        burn_in: DEFAULT_BURN_IN,
        noise: NoiseConfig {
            e_variance: 1.0,
            u_variance: None,
        },
        estimation: EstimationConfig {
            ar_order: None,
            relation: Some(OrderChoice::Fixed { q: 1, r: 1 }),
            pin_b0: true,
            arma: Some(ArmaOrders { p: 1, q: 1 }),
            arma_refine: true,
            input_orders: None,
            exact_chain: true,
        },
        runs: 1,
        master_seed: 0,
        output_dir: None,
    }
}

/// `y = F u + K e` with FIR `F`, second-order `K`, `var u = 2`, `var e = 1`.
pub fn example3() -> ScenarioConfig {
    ScenarioConfig {
        scenario_id: "example3".into(),
        kind: Kind::WithInput,
        system: SystemSpec {
            f1: Some(zinv(&[0.0, 0.3, 0.7, 0.3], &[1.0])),
            f2: Some(zinv(&[0.0, 0.15, 0.9, -0.5], &[1.0])),
            k1: Some(zinv(&[1.0, 0.1, 0.4], &[1.0, 0.3, 0.4])),
            k2: Some(zinv(&[1.0, 0.1, 0.4], &[1.0, -0.2, 0.1])),
            ..Default::default()
        },
        n: 500,
        burn_in: DEFAULT_BURN_IN,
        noise: NoiseConfig {
            e_variance: 1.0,
            u_variance: Some(2.0),
        },
        estimation: EstimationConfig {
            ar_order: None,
            relation: Some(OrderChoice::Fixed { q: 2, r: 2 }),
            pin_b0: false,
            arma: Some(ArmaOrders { p: 2, q: 2 }),
            arma_refine: true,
            input_orders: Some([
                OrderChoice::Fixed { q: 1, r: 3 },
                OrderChoice::Fixed { q: 2, r: 4 },
            ]),
            exact_chain: false,
        },
        runs: 100,
        master_seed: 3,
        output_dir: None,
    }
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example3" => Some(example3()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(w: &RatTF) -> (Vec<f64>, Vec<f64>) {
        (w.num().coeffs().to_vec(), w.den().coeffs().to_vec())
    }

    #[test]
    fn example1_systems() {
        let c = example1();
        assert_eq!(
            coeffs(c.system.w1.as_ref().unwrap()),
            (vec![0.0, 0.0, 0.0, 1.0], vec![0.05, -0.25, -0.2, 1.0])
        );
        assert_eq!(
            coeffs(c.system.w2.as_ref().unwrap()),
            (vec![0.0, 0.0, 0.0, 1.0], vec![0.01, 0.03, -0.6, 1.0])
        );
        assert_eq!((c.n, c.runs), (500, 100));
    }

    #[test]
    fn example2_single_run() {
        let c = example2();
        assert_eq!(c.runs, 1);
        assert_eq!(
            coeffs(c.system.w1.as_ref().unwrap()),
            (vec![2.0, 1.0], vec![-0.2, 1.0])
        );
        assert_eq!(
            coeffs(c.system.w2.as_ref().unwrap()),
            (vec![-2.0, 1.0], vec![-0.2, 1.0])
        );
    }

    #[test]
    fn example3_systems() {
        let c = example3();
        assert_eq!(c.noise.u_variance, Some(2.0));
        assert_eq!(c.noise.e_variance, 1.0);
        let f1 = c.system.f1.as_ref().unwrap().to_delay_form().unwrap();
        assert_eq!(f1, (vec![0.0, 0.3, 0.7, 0.3], vec![1.0]));
        let f2 = c.system.f2.as_ref().unwrap().to_delay_form().unwrap();
        assert_eq!(f2, (vec![0.0, 0.15, 0.9, -0.5], vec![1.0]));
        let k1 = c.system.k1.as_ref().unwrap().to_delay_form().unwrap();
        assert_eq!(k1, (vec![1.0, 0.1, 0.4], vec![1.0, 0.3, 0.4]));
        let k2 = c.system.k2.as_ref().unwrap().to_delay_form().unwrap();
        assert_eq!(k2, (vec![1.0, 0.1, 0.4], vec![1.0, -0.2, 0.1]));
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert!(c.validate().is_empty(), "{name}");
            let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
        assert!(preset("example4").is_none());
    }
}
