int seed_11(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (acc < 16) { t += k + k; acc++; }
    return acc + t;
}
