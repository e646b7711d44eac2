use nurbsfeed_wasm::{cap_json, profile_json, schedule_json};
use serde_json::Value;

fn parse(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn schedule_view_of_line() {
    let view = parse(&schedule_json("line50", 0.0).unwrap());
    let t = numbers(&view["series"]["t"]);
    let v = numbers(&view["series"]["v"]);
    assert_eq!(t.len(), v.len());
    assert_eq!(t.len(), numbers(&view["x"]).len());
    let total = view["total_time"].as_f64().unwrap();
    assert!((t[t.len() - 1] - total).abs() < 1e-12);
    assert!(v.iter().all(|&x| x <= 200.0 + 1e-6));
    assert_eq!(view["junctions"].as_array().unwrap().len(), 1);
}

#[test]
fn lower_feedrate_slows_the_trident() {
    let fast = parse(&schedule_json("trident", 0.0).unwrap());
    let slow = parse(&schedule_json("trident", 100.0).unwrap());
    assert!(slow["total_time"].as_f64().unwrap() > fast["total_time"].as_f64().unwrap());
    assert!(slow["max_feedrate"].as_f64().unwrap() <= 100.0 + 1e-6);
}

#[test]
fn profile_view_matches_worked_example() {
    let view = parse(&profile_json(0.0, 20.0, 50.0, 0.0).unwrap());
    assert_eq!(view["case"], "ACC_AND_DEC");
    assert!((view["total_time"].as_f64().unwrap() - 0.390242).abs() < 1e-6);
    let v = numbers(&view["series"]["v"]);
    assert_eq!(v[0], 0.0);
    assert!((v[v.len() - 1] - 20.0).abs() < 1e-9);
}

#[test]
fn cap_view_has_trident_breakpoints() {
    let view = parse(&cap_json("trident", 0.0).unwrap());
    assert_eq!(numbers(&view["breakpoints"]).len(), 5);
    let caps = numbers(&view["v_limit"]);
    assert_eq!(caps.len(), numbers(&view["u"]).len());
    assert!(caps.iter().all(|&c| (0.0..=200.0).contains(&c)));
}

#[test]
fn errors_are_strings() {
    assert!(schedule_json("spiral", 0.0).unwrap_err().contains("spiral"));
    assert!(profile_json(0.0, 0.0, -1.0, 0.0).is_err());
}
