// Command-line front end. Subcommands are wired up as the library grows.
#include <cstdio>

int main() {
    std::puts("gtcnn: no subcommand given");
    return 2;
}
