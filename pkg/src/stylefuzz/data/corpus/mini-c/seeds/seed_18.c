int seed_18(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (acc < 16) { t += t * k; acc++; }
    t += t + t;
    while (k < 16) { t = t - acc; k++; }
    return acc + t;
}
