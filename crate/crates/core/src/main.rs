fn main() {
    std::process::exit(cavity_ef::cli::main_entry());
}
