int max(int a, int b) {
    if (a > b) return a;
    return b;
}

int clamp(int v, int hi) {
    int m = max(v, 0);
    if (m > hi) m = hi;
    return m;
}

int main() {
    int r = clamp(__VERIFIER_nondet_int(), 10);
    return r;
}
