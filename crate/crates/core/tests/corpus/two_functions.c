int inc(int v) {
    return v + 1;
}

int main() {
    int x = 3;
    x = inc(x);
    return x;
}
