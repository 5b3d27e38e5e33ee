fn main() {
    let dir = "/root/crate/corpus";
    let model = std::sync::Arc::new(ecrv_core::model::parse_domain(&std::fs::read_to_string(format!("{dir}/toggle.ec")).unwrap()).unwrap());
    let n = ecrv_core::model::parse_narrative(&std::fs::read_to_string(format!("{dir}/toggle.nrt")).unwrap()).unwrap();
    let opts = ecrv_core::engine::EngineOpts { zeno_bound: 1000, ..Default::default() };
    let t0 = std::time::Instant::now();
    let r = ecrv_core::engine::trigger_closure(&model, &n, opts);
    println!("closure: {:?} in {:?}", r.as_ref().err().map(|e| e.to_string().chars().take(40).collect::<String>()), t0.elapsed());
}
