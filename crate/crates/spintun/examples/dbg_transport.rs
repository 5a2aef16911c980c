use spintun::monodromy::{transport, closed_form_continuation, LoopKind, LoopSpec, predicted_jump};
use spintun::surface::Moduli;

fn main() {
    let cases = [
        ("lambda eps=0     ", LoopKind::Lambda, Moduli::real(0.5, 0.1, 0.0), 256),
        ("1-sqrt(lam) h=0  ", LoopKind::OneMinusSqrtLambda, Moduli::real(0.5, 0.0, 0.0), 256),
        ("1-sqrt(lam) h=.2 ", LoopKind::OneMinusSqrtLambda, Moduli::real(0.5, 0.2, 0.0), 384),
        ("combination h=.2 ", LoopKind::CriticalDCombination, Moduli::real(0.85, 0.2, 0.0), 384),
        ("epsilon loop     ", LoopKind::Epsilon, Moduli::real(0.5, 0.1, 0.05), 256),
        ("1+sqrt(lam) h=0  ", LoopKind::OnePlusSqrtLambda, Moduli::real(0.5, 0.0, 0.0), 384),
    ];
    for (name, kind, base, steps) in cases {
        let spec = LoopSpec::new(kind, base, steps);
        let pred = predicted_jump(&spec, &base);
        match transport(&spec, 1e-9) {
            Ok(r) => {
                println!("{name}: before = {:.8} after = {:.8}", r.value_before, r.value_after);
                println!("      jump = {:.8}  predicted = {:.8}  class = {:?}", r.jump, pred, r.classification);
            }
            Err(e) => println!("{name}: ERROR {e}"),
        }
        match closed_form_continuation(&spec) {
            Ok((b, a)) => println!("      closed-form: before = {:.8} jump = {:.8}", b, a - b),
            Err(e) => println!("      cf continuation error: {e}"),
        }
    }
}
