// SPDX-License-Identifier: MIT OR Apache-2.0

use cpfind::hypothesis::{Target, TestConfig};
use cpfind::simulate::{run_size_power, DgpSpec, Experiment, NoiseSpec, SizePowerResult};

fn run(dgp: DgpSpec, noise: NoiseSpec, n: usize, target: Target) -> SizePowerResult {
    let exp = Experiment {
        dgp,
        noise,
        n,
        reps: 100,
        seed: 2024,
    };
    let cfg = TestConfig {
        target,
        ..TestConfig::default()
    };
    run_size_power(&exp, &cfg).unwrap()
}

#[test]
fn mean_test_null_size() {
    let r = run(DgpSpec::white_noise(), NoiseSpec::Normal, 2000, Target::Mean);
    assert!(r.size <= 0.10, "{r:?}");
}

#[test]
fn mean_test_power_tar_power_law() {
    let r = run(DgpSpec::tar(), NoiseSpec::power_law(), 2000, Target::Mean);
    assert!(r.power >= 0.5, "{r:?}");
}

#[test]
fn variance_test_null_size() {
    let r = run(DgpSpec::white_noise(), NoiseSpec::Normal, 1000, Target::Variance);
    assert!(r.size <= 0.10, "{r:?}");
}

#[test]
fn variance_test_power_tar_power_law() {
    let r = run(DgpSpec::tar(), NoiseSpec::power_law(), 1000, Target::Variance);
    assert!(r.power >= 0.75, "{r:?}");
}

#[test]
fn joint_test_size_and_power() {
    let null = run(DgpSpec::white_noise(), NoiseSpec::Normal, 1000, Target::Joint);
    assert!(null.size <= 0.10, "{null:?}");
    let alt = run(DgpSpec::arma_garch(), NoiseSpec::Normal, 2000, Target::Joint);
    assert!(alt.power >= 0.75, "{alt:?}");
    assert_eq!(alt.failures, 0);
}
