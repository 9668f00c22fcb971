use std::time::Instant;
use transgress::spaces::Registry;
use transgress::verify;

fn main() {
    let reg = Registry::global();
    for (name, f) in [
        ("newton", verify::newton_cases as fn(&Registry) -> Vec<verify::CaseResult>),
        ("revi1", verify::revi1_cases),
        ("final-answer", verify::final_answer_cases),
        ("registry", verify::registry_cases),
    ] {
        let t = Instant::now();
        let cases = f(reg);
        let fails = cases.iter().filter(|c| !c.pass).count();
        println!("{name}: {} cases, {} failed, {:?}", cases.len(), fails, t.elapsed());
        for c in cases.iter().filter(|c| !c.pass).take(5) {
            println!("   FAIL {}: {:?}", c.name, c.detail);
        }
    }
    let t = Instant::now();
    let cases = verify::map_consistency_cases(reg, verify::DEFAULT_SEED);
    println!("map-consistency: {} cases, {} failed, {:?}", cases.len(), cases.iter().filter(|c| !c.pass).count(), t.elapsed());
    for c in cases.iter().filter(|c| !c.pass).take(5) {
        println!("   FAIL {}: {:?}", c.name, c.detail);
    }
    let t = Instant::now();
    let cases = verify::parser_cases(reg, verify::DEFAULT_SEED);
    println!("parser: {} cases, {} failed, {:?}", cases.len(), cases.iter().filter(|c| !c.pass).count(), t.elapsed());
    for c in cases.iter().filter(|c| !c.pass).take(5) {
        println!("   FAIL {}: {:?}", c.name, c.detail);
    }
}
