int scale(int x, int y) {
    return x * y + 1;
}

int seed_14(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (t < 8) { k = k - k; t++; }
    if (acc > 3) { t += t + acc; } else { k += k - k; }
    return acc + t;
}
