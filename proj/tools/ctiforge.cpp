#include <cstdio>
int main() {
    std::printf("ctiforge (placeholder)\n");
    return 0;
}
