//! The oracle self-tests behind `vtgrasp check`.

fn main() {
    for result in vtgrasp::check::run_checks(0) {
        println!("{result}");
    }
}
