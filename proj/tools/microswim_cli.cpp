#include <cstdio>

int main() {
    std::puts("microswim cli placeholder");
    return 0;
}
