fn main() {
    println!("cvqkd CLI placeholder");
}
