int fact(int n) {
    if (n <= 1) return 1;
    return n * fact(n - 1);
}

int main() {
    int r = fact(5);
    __VERIFIER_assert(r == 120);
    return 0;
}
