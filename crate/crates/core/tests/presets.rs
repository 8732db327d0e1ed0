use std::path::PathBuf;

use negamp::config::{DatasetSource, TrainConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// name, E_d¹, F_m¹, E_d², F_m², τ, epochs, learning rate, layer width
type Row = (&'static str, f64, f64, f64, f64, f64, usize, f64, usize);

const TABLE: [Row; 9] = [
    ("cora", 0.45, 0.35, 0.15, 0.5, 0.4, 1200, 5e-3, 128),
    ("citeseer", 0.95, 0.85, 0.3, 0.25, 0.2, 1200, 5e-4, 128),
    ("pubmed", 0.5, 0.45, 0.4, 0.4, 0.1, 2000, 5e-4, 128),
    ("dblp", 0.5, 0.25, 0.3, 0.45, 0.5, 1200, 5e-4, 128),
    ("wikics", 0.35, 0.25, 0.75, 0.4, 0.85, 1200, 5e-4, 256),
    (
        "amazon-computers",
        0.5,
        0.4,
        0.15,
        0.25,
        0.15,
        1200,
        5e-4,
        256,
    ),
    ("amazon-photo", 0.1, 0.15, 0.45, 0.2, 0.5, 1200, 1e-5, 256),
    ("coauthor-cs", 0.2, 0.5, 0.5, 0.4, 0.7, 1200, 1e-5, 256),
    ("actor", 0.5, 0.35, 0.3, 0.5, 0.2, 1200, 5e-4, 128),
];

#[test]
fn dataset_presets_carry_published_settings() {
    for (name, e1, f1, e2, f2, tau, epochs, lr, width) in TABLE {
        let path = configs_dir().join(format!("{name}.toml"));
        let c = TrainConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        let a = c.augment;
        assert_eq!(
            (
                a.edge_drop_prob_v1,
                a.feat_mask_prob_v1,
                a.edge_drop_prob_v2,
                a.feat_mask_prob_v2
            ),
            (e1, f1, e2, f2),
            "{name}"
        );
        assert_eq!(
            (c.tau, c.epochs, c.learning_rate, c.weight_decay),
            (tau, epochs, lr, 1e-5),
            "{name}"
        );
        assert_eq!((c.hidden_dim, c.output_dim), (width, width), "{name}");
        assert_eq!((c.agent.kappa_init, c.agent.kappa_max), (10, 100), "{name}");
        match c.dataset {
            DatasetSource::Files(p) => {
                assert!(
                    p.edges.ends_with(format!("data/{name}/edges.tsv")),
                    "{name}"
                );
                assert!(p.labels.is_some(), "{name}");
            }
            DatasetSource::Sbm(_) => panic!("{name} should read files"),
        }
    }
}

#[test]
fn desk_preset_matches_builtin() {
    let c = TrainConfig::load(&configs_dir().join("sbm-desk.toml")).unwrap();
    assert_eq!(c, TrainConfig::sbm_desk());
}
