use dronepose_core::kernel::gradcheck::run_suite;

fn main() {
    for r in run_suite(17).unwrap() {
        println!("{r}");
    }
}
