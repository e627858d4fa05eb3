fn main() { println!("csfi"); }
