//! Drive the command-line front end without spawning a process.

fn main() {
    let out = std::env::temp_dir().join("nvsim_example_sgi.json");
    let out = out.to_string_lossy().into_owned();
    let code = nvsim::cli::main_with(["nvsim", "sgi", "--duration", "40us", "--format", "json", "-o", &out]);
    println!("exit code {code}");
    if let Ok(text) = std::fs::read_to_string(&out) {
        let v: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
        println!("max splitting {} m", v["summary"]["max_splitting_m"]);
    }
}
