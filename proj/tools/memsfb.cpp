// Command-line driver; see `memsfb --help` for the keys.

#include "memsfb/cli.hpp"

int main(int argc, char** argv)
{
    memsfb::RunConfig cfg;
    if (auto stop = memsfb::parse_args(argc, argv, cfg))
        return *stop;
    return memsfb::run(cfg);
}
