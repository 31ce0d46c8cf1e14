//! Configs shipped with the library, addressable by name.

const BUNDLED: &[(&str, &str)] = &[
    (
        "arch1_abcel",
        include_str!("../../configs/arch1_abcel.toml"),
    ),
    (
        "arch1_rejection",
        include_str!("../../configs/arch1_rejection.toml"),
    ),
    (
        "arch1_synthetic",
        include_str!("../../configs/arch1_synthetic.toml"),
    ),
    (
        "boom_bust_abcel",
        include_str!("../../configs/boom_bust_abcel.toml"),
    ),
    (
        "boom_bust_rejection",
        include_str!("../../configs/boom_bust_rejection.toml"),
    ),
    (
        "boom_bust_synthetic",
        include_str!("../../configs/boom_bust_synthetic.toml"),
    ),
    (
        "er_graph_coverage",
        include_str!("../../configs/er_graph_coverage.toml"),
    ),
    ("gk_abcel", include_str!("../../configs/gk_abcel.toml")),
    (
        "gk_rejection",
        include_str!("../../configs/gk_rejection.toml"),
    ),
    (
        "gk_synthetic",
        include_str!("../../configs/gk_synthetic.toml"),
    ),
    (
        "normal_mean_median_table1",
        include_str!("../../configs/normal_mean_median_table1.toml"),
    ),
    (
        "normal_mean_table1",
        include_str!("../../configs/normal_mean_table1.toml"),
    ),
    (
        "normal_median_table1",
        include_str!("../../configs/normal_median_table1.toml"),
    ),
    (
        "normal_quartiles_table1",
        include_str!("../../configs/normal_quartiles_table1.toml"),
    ),
    (
        "normal_three_moments_table1",
        include_str!("../../configs/normal_three_moments_table1.toml"),
    ),
    (
        "normal_two_moments_table1",
        include_str!("../../configs/normal_two_moments_table1.toml"),
    ),
    (
        "normal_var_max_fig1",
        include_str!("../../configs/normal_var_max_fig1.toml"),
    ),
    (
        "normal_var_mean_square_fig1",
        include_str!("../../configs/normal_var_mean_square_fig1.toml"),
    ),
    ("smoke", include_str!("../../configs/smoke.toml")),
    (
        "stereo_abcel",
        include_str!("../../configs/stereo_abcel.toml"),
    ),
    (
        "stereo_rejection",
        include_str!("../../configs/stereo_rejection.toml"),
    ),
    (
        "stereo_synthetic",
        include_str!("../../configs/stereo_synthetic.toml"),
    ),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentConfig;

    #[test]
    fn every_bundled_config_parses_and_round_trips() {
        for name in bundled_names() {
            let cfg = ExperimentConfig::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.experiment.name, name);
            let text = cfg.to_toml().unwrap();
            let again = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.to_toml().unwrap(), text);
        }
    }
}
