// Kept in its own test binary: it mutates the process environment.

use corpus_scope::config::{PipelineConfig, STOPLIST_ENV};

#[test]
fn stoplist_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let from_env = tmp.path().join("env.txt");
    let from_flag = tmp.path().join("flag.txt");
    std::fs::write(&from_env, "# env list\nscience\n").unwrap();
    std::fs::write(&from_flag, "data\n").unwrap();

    let mut cfg = PipelineConfig::default();
    let (bundled, source) = cfg.stoplist().unwrap();
    assert!(bundled.contains("the"));
    assert!(source.contains("bundled"), "{source}");

    // SAFETY: no other thread in this binary reads the environment.
    unsafe { std::env::set_var(STOPLIST_ENV, &from_env) };
    let (env_list, source) = cfg.stoplist().unwrap();
    assert!(env_list.contains("science") && !env_list.contains("the"));
    assert_eq!(source, from_env.display().to_string());

    cfg.text_pipeline.stoplist = Some(from_flag.clone());
    let (flag_list, _) = cfg.stoplist().unwrap();
    assert!(flag_list.contains("data") && !flag_list.contains("science"));
    unsafe { std::env::remove_var(STOPLIST_ENV) };
}
