use groupsparse_web::Demo;
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn digits_training_reports_map_and_accuracy() {
    let mut demo = Demo::new();
    let v = parse(&demo.train_digits("sgl", 1e-3, 20, 1));
    assert!(v.get("error").is_none(), "{v}");
    assert_eq!(v["pixels"].as_array().unwrap().len(), 64);
    assert_eq!(v["image_shape"], serde_json::json!([8, 8]));
    assert_eq!(v["objective"].as_array().unwrap().len(), 20);
    assert!(v["test_accuracy"].as_f64().unwrap() > 0.5);
    let mask = v["report"]["feature_mask"].as_array().unwrap();
    for (p, m) in v["pixels"].as_array().unwrap().iter().zip(mask) {
        assert_eq!(p.as_u64() == Some(255), m == false);
    }
}

#[test]
fn pruning_harder_never_reduces_sparsity() {
    let mut demo = Demo::new();
    let base = parse(&demo.train_digits("l1", 1e-3, 10, 2));
    let harder = parse(&demo.prune(0.05));
    let s = |v: &Value| v["report"]["total_sparsity"].as_f64().unwrap();
    assert!(s(&harder) >= s(&base));
    assert_eq!(harder["threshold"], 0.05);
}

#[test]
fn blobs_expose_twenty_inputs() {
    let mut demo = Demo::new();
    let v = parse(&demo.train_blobs("gl", 1e-3, 5, 0));
    assert_eq!(v["report"]["feature_mask"].as_array().unwrap().len(), 20);
    assert!(v["image_shape"].is_null());
}

#[test]
fn errors_are_reported_as_json() {
    let mut demo = Demo::new();
    assert!(parse(&demo.prune(1e-3))["error"].is_string());
    assert!(parse(&demo.train_digits("l3", 1e-3, 1, 0))["error"].is_string());
    assert!(parse(&demo.train_blobs("sgl", -1.0, 1, 0))["error"].is_string());
}
