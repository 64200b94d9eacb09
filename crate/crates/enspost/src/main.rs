fn main() {
    println!("enspost");
}
