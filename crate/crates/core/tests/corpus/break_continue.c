int main() {
    int i = 0, odd = 0;
    while (1) {
        i++;
        if (i > 20) break;
        if (i % 2 == 0) continue;
        odd = odd + 1;
    }
    return odd;
}
